from setuptools import setup, find_packages
import besqlib

with open("README.md", "r") as fh:
    longdescription = fh.read()

setup(
    name=besqlib.name,
    version=besqlib.__version__,
    url="https://besqlib.org",
    project_urls={
        "Download": "https://github.com/besqlib-org/besqlib/releases",
        "Documentation": "https://besqlib.readthedocs.io/",
        "GitHub": "https://github.com/besqlib-org/besqlib",
        "Issues": "https://github.com/besqlib-org/besqlib/issues",
        "Pull Requests": "https://github.com/besqlib-org/besqlib/pulls",
    },
    license=besqlib.__license__,
    author=besqlib.__author__,
    author_email=besqlib.__author_email__,
    description="Squared Bessel processes and real-world pricing",
    long_description=longdescription,
    long_description_content_type="text/markdown",
    packages=find_packages(),
    include_package_data=True,
    package_data={"besqlib": ["data/*"]},
    test_suite="besqlib.tests",
    install_requires=["numpy>=1.17", "scipy>=1.4"],
    entry_points={"console_scripts": ["besqlib=besqlib.cli:main"]},
    keywords=(
        "squared-bessel-process minimal-market-model benchmark-approach "
        "real-world-pricing lie-symmetries laplace-inversion wishart "
        "multilevel-monte-carlo"
    ),
    python_requires=">=3.8",
    classifiers=[
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.8",
        "Development Status :: 4 - Beta",
        "Intended Audience :: Developers",
        "Intended Audience :: Education",
        "Intended Audience :: Financial and Insurance Industry",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Operating System :: OS Independent",
        "Topic :: Office/Business :: Financial",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Software Development :: Libraries :: Python Modules",
    ],
)
