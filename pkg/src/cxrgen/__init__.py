"""Multi-model chest X-ray report generator.

Pipeline: preprocess a radiograph into lung segments, run one binary
classifier per abnormality (cardiomegaly, effusion, consolidation),
aggregate the labels into a result code, and render a report from the
master text.
"""

__version__ = "0.1.0"
