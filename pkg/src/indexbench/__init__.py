"""Verification workbench for supertrace, Pfaffian and Thom-form identities and
for heat-kernel index computations on small model geometries."""

__version__ = "0.1.0"
