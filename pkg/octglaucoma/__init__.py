"""
octglaucoma - glaucoma detection from circumpapillary OCT B-scans.

Hand-crafted structural, texture and fractal descriptors, statistical
feature selection and a one-hidden-layer network, evaluated with a
patient-grouped split and stratified cross-validation.
"""

__version__ = "0.1.0"
