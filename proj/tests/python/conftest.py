"""Make the in-tree package importable against the CMake-built extension.

An editable pip install does the same thing; this keeps `pytest tests/python`
working straight from a plain cmake build.
"""

import pathlib
import shutil
import sys

root = pathlib.Path(__file__).resolve().parents[2]
pkg_dir = root / "python"

built = sorted((root / "build").glob("_cspat*.so"))
if built:
    ext = built[-1]
    dest = pkg_dir / "cspat" / ext.name
    if not dest.exists() or ext.stat().st_mtime > dest.stat().st_mtime:
        shutil.copy2(ext, dest)

if str(pkg_dir) not in sys.path:
    sys.path.insert(0, str(pkg_dir))
