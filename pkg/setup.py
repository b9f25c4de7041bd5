from setuptools import find_packages
from setuptools import setup

setup(
    name="liras",
    description="Bayesian inverse planning over symbolic gridworld stimuli",
    long_description=open("README.rst").read(),
    long_description_content_type="text/x-rst",
    license="BSD",
    use_scm_version=True,
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.7",
    setup_requires=["setuptools_scm"],
    install_requires=[
        "numpy>=1.17",
        "pyparsing>=3.0.0",
        "python-json-logger~=0.1",
        "requests>=2.21.0",
        "scipy>=1.3",
    ],
    package_data={
        "liras": ["py.typed", "data/*.pddl", "data/*.json"],
        "liras.synthesis": ["templates/*.txt"],
    },
    zip_safe=False,
    entry_points={"console_scripts": ["liras = liras.cli:main"]},
    classifiers=[
        "Development Status :: 4 - Beta",
        "License :: OSI Approved :: BSD License",
        "Operating System :: POSIX :: Linux",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
