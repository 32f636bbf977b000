import os


class RuntimeConfig:
    def __init__(self):
        # Logging settings
        self.LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO")

        # Worker pool used for candidates, targets and benchmark cells
        self.MAX_WORKERS = int(os.environ.get("GRANGER_DR_MAX_WORKERS", 1))

        # Optional Prometheus textfile export
        self.METRICS_PATH = os.environ.get("GRANGER_DR_METRICS_PATH")

        # Location of the official DREAM3 files, used by the acceptance tests
        self.DREAM3_DIR = os.environ.get("GRANGER_DR_DREAM3_DIR")
