"""Opposite-circular-polarization pulse-pair detection pipeline.

Stage 1 produces per-polarization detections (synthetic sky or IQ front end),
stage 2 pairs LHC/RHC detections inside a coarse Δt/Δf window, and stage 3
filters RFI, applies the Δt/Δf matched filter and scores RA-bin excesses.
"""

__version__ = "0.1.0"
