"""Core computational modules of the deformation workbench"""
