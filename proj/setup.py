"""CMake-driven build of the affinerf._core extension.

The sandbox mirrors do not carry scikit-build-core, so this follows the
classic pybind11 cmake_example pattern: setuptools invokes CMake for the
extension and packages the pure-python shim from python/affinerf.
"""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension


class CMakeExtension(Extension):
    def __init__(self, name: str):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext: CMakeExtension) -> None:
        source_dir = Path(__file__).parent.resolve()
        # get_ext_fullpath already ends in affinerf/_core.<abi>.so
        out_dir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)

        cfg = "Debug" if self.debug else "Release"
        cmake_args = [
            f"-DCMAKE_BUILD_TYPE={cfg}",
            f"-DPython3_EXECUTABLE={sys.executable}",
            "-DAFFINERF_PYTHON=ON",
        ]
        if "CMAKE_ARGS" in os.environ:
            cmake_args += [a for a in os.environ["CMAKE_ARGS"].split(" ") if a]

        subprocess.check_call(["cmake", str(source_dir), *cmake_args], cwd=build_dir)
        subprocess.check_call(
            ["cmake", "--build", ".", "--target", "_core", f"-j{os.cpu_count() or 2}"],
            cwd=build_dir,
        )

        out_dir.mkdir(parents=True, exist_ok=True)
        built = list((build_dir / "python" / "affinerf").glob("_core*"))
        if not built:
            raise RuntimeError("cmake did not produce the _core module")
        for module in built:
            self.copy_file(str(module), str(out_dir / module.name))


setup(
    packages=["affinerf"],
    package_dir={"affinerf": "python/affinerf"},
    ext_modules=[CMakeExtension("affinerf._core")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
