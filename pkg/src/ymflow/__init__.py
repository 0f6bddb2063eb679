"""Yang-Mills heat flow on 3D lattices through the augmented (gauge-fixed) flow,
with reconstruction of the Yang-Mills solution and a verification suite."""

__version__ = "0.1.0"
