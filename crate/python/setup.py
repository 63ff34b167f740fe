"""Builds the coevo_py extension module by delegating to cargo.

The compiled cdylib from crates/coevo-py is copied to wherever setuptools
expects the extension, so both regular and editable installs work. Requires a
Rust toolchain on PATH.
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

REPO_ROOT = Path(__file__).resolve().parent.parent

DYLIB_NAME = {
    "darwin": "libcoevo_py.dylib",
    "win32": "coevo_py.dll",
}.get(sys.platform, "libcoevo_py.so")


class CargoBuildExt(build_ext):
    def build_extension(self, ext):
        subprocess.run(
            ["cargo", "build", "--release", "-p", "coevo-py"],
            cwd=REPO_ROOT,
            check=True,
        )
        built = REPO_ROOT / "target" / "release" / DYLIB_NAME
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(built, dest)


setup(
    ext_modules=[Extension("coevo_py", sources=[])],
    cmdclass={"build_ext": CargoBuildExt},
)
