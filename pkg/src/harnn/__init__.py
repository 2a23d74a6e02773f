"""From-scratch CNN-LSTM engine for human-activity recognition on the UCI HAR dataset."""

__version__ = "0.1.0"
