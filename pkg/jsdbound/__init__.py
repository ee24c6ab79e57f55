from importlib.metadata import PackageNotFoundError, metadata, version

try:
    __version__ = version('jsdbound')
    __doc__ = metadata('jsdbound')['Summary']
    __author__ = metadata('jsdbound')['Author']
except PackageNotFoundError:  # running from a source checkout
    __version__ = '0.0.0'

from .bench import main
