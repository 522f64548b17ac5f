"""
File storage services for datasets, parameters, models and reports
"""

from .dataset_storage_service import DatasetStorageService
from .file_storage import FileStorageService
from .model_storage_service import ModelStorageService
from .parameter_storage_service import ParameterStorageService
from .report_storage_service import ReportStorageService

__all__ = [
    'FileStorageService', 'ParameterStorageService', 'DatasetStorageService',
    'ModelStorageService', 'ReportStorageService',
]
