"""
Setup script for the SB-MCL package
"""
from setuptools import setup, find_packages

setup(
    name="sbmcl",
    version="1.0.0",
    description="Sequential Bayesian meta-continual learning on a from-scratch autodiff core",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-cov>=4.0.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "sbmcl=cli.main:run",
        ],
    },
)
