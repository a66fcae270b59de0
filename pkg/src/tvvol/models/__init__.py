"""
Model layer: immutable value objects and pure numerical routines.
"""
