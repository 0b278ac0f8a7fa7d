"""Builds the Rust extension through cargo.

Neither maturin nor setuptools-rust is assumed: a plain build_ext override
compiles the cdylib with `cargo build --release -p bifconj-py` and copies
it to wherever setuptools expects the extension module. Install with

    pip install --no-build-isolation -e crates/bifconj-py
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

CRATE_DIR = Path(__file__).resolve().parent
CDYLIB = {
    "linux": "libbifconj_py.so",
    "darwin": "libbifconj_py.dylib",
    "win32": "bifconj_py.dll",
}


class CargoExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CargoBuildExt(build_ext):
    def build_extension(self, ext):
        subprocess.run(
            ["cargo", "build", "--release", "-p", "bifconj-py"],
            cwd=CRATE_DIR,
            check=True,
        )
        for platform, libname in CDYLIB.items():
            if sys.platform.startswith(platform):
                break
        else:
            raise RuntimeError(f"unsupported platform: {sys.platform}")
        built = CRATE_DIR.parent.parent / "target" / "release" / libname
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(built, dest)


setup(
    ext_modules=[CargoExtension("bifconj_py")],
    cmdclass={"build_ext": CargoBuildExt},
)
