from setuptools import setup

setup(
    name='kpmperf',
    version='0.1.0',
    description='Kernel Polynomial Method density of states solver with '
                'augmented sparse kernels and a roofline performance model',
    url='',
    author='pyKPMPerf developers',
    author_email='',
    license='MIT',
    packages=['kpmperf',
              'kpmperf.core',
              'kpmperf.model',
              'kpmperf.bench',
              'kpmperf.utils'],
    install_requires=['numpy',
                      'pandas',
                      'scipy',
                      'numba'
                      ],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['kpmperf=kpmperf.cli:main']},
    python_requires='>=3.8',

    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3.8',
        'Topic :: Scientific/Engineering :: Physics'
    ],
)
