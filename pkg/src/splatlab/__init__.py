"""A package for 3D Gaussian splatting of photo collections in the wild.

The scene is a cloud of anisotropic Gaussians whose colors are decoded,
for every reference image, from a global appearance embedding, a local
embedding sampled from a triplane and per-Gaussian intrinsic features.
A parsing network predicts which pixels show transient occluders.

Subpackages are imported on demand, e.g. ``from splatlab import training``.

"""


from .__version__ import __version__
