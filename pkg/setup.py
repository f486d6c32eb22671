from pathlib import Path

from setuptools import setup

version = Path("./shsk/version.py").read_text().split("=")[1].strip().replace('"', "")


setup(
    name="shsk",
    description="Surrogate hyperplane sparse Kaczmarz solvers",
    long_description=Path("README.md").read_text(),
    long_description_content_type="text/markdown",
    license="MIT",
    version=version,
    packages=["shsk"],
    install_requires=["numpy>=1.17", "scipy>=1.4"],
    extras_require={"test": ["pytest", "hypothesis"]},
    entry_points={"console_scripts": ["shsk=shsk.cli:main"]},
    python_requires=">=3.7",
)
