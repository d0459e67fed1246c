"""
Application Configuration - environment driven
"""
import os
import sys
from dotenv import load_dotenv

load_dotenv()

class Config:
    # Flask
    SECRET_KEY = os.getenv('SECRET_KEY', 'your-secret-key-change-in-production')
    MAX_CONTENT_LENGTH = int(os.getenv('MAX_CONTENT_LENGTH', 16 * 1024 * 1024))
    HOST = os.getenv('HOST', '0.0.0.0')
    PORT = int(os.getenv('PORT', 8000))
    CORS_ORIGINS = [o.strip() for o in os.getenv('CORS_ORIGINS', '*').split(',') if o.strip()]

    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()

    # Randomness
    WORKBENCH_SEED = int(os.getenv('WORKBENCH_SEED', 0))

    # Embedding search guards
    BRUTE_EMBED_GUARD = int(os.getenv('BRUTE_EMBED_GUARD', 14))
    HEURISTIC_BUDGET = int(os.getenv('HEURISTIC_BUDGET', 200000))
    HEURISTIC_RESTARTS = int(os.getenv('HEURISTIC_RESTARTS', 8))

    # Local resampling
    RESAMPLE_CAP = int(os.getenv('RESAMPLE_CAP', 1000000))
    ROUND_LOG_LIMIT = int(os.getenv('ROUND_LOG_LIMIT', 10000))

    # Experiments
    ENUMERATION_MAX_ORDER = int(os.getenv('ENUMERATION_MAX_ORDER', 7))
    DK_MAX_ORDER = int(os.getenv('DK_MAX_ORDER', 5))
    FAVORABLE_MAX_ORDER = int(os.getenv('FAVORABLE_MAX_ORDER', 3))
    GROUNDED_SAMPLE_ATTEMPTS = int(os.getenv('GROUNDED_SAMPLE_ATTEMPTS', 10000))
    DK_WORKERS = int(os.getenv('DK_WORKERS', 1))

    # RESULT STORAGE SETTINGS
    RESULTS_FOLDER = os.getenv('RESULTS_FOLDER', './results')
    RESULT_RETENTION_DAYS = int(os.getenv('RESULT_RETENTION_DAYS', 30))
    ENABLE_RESULT_STORAGE = os.getenv('ENABLE_RESULT_STORAGE', 'True').lower() == 'true'
    ENABLE_CLEANUP_SCHEDULER = os.getenv('ENABLE_CLEANUP_SCHEDULER', 'True').lower() == 'true'

    @staticmethod
    def init_app(app=None, stream=None):
        # the CLI passes stderr so stdout stays pure JSON
        out = stream or sys.stdout

        # Create results folder if not exists
        if Config.ENABLE_RESULT_STORAGE:
            os.makedirs(Config.RESULTS_FOLDER, exist_ok=True)

        # Repair values that would make every run fail
        positive = {
            'BRUTE_EMBED_GUARD': 14,
            'HEURISTIC_BUDGET': 200000,
            'HEURISTIC_RESTARTS': 8,
            'RESAMPLE_CAP': 1000000,
            'ROUND_LOG_LIMIT': 10000,
            'ENUMERATION_MAX_ORDER': 7,
            'DK_MAX_ORDER': 5,
            'FAVORABLE_MAX_ORDER': 3,
            'GROUNDED_SAMPLE_ATTEMPTS': 10000,
            'DK_WORKERS': 1,
        }
        for name, default in positive.items():
            if getattr(Config, name) < 1:
                print(f"⚠️  Invalid {name}: {getattr(Config, name)}", file=out)
                print(f"   Defaulting to {default}", file=out)
                setattr(Config, name, default)

        if Config.LOG_LEVEL not in ['DEBUG', 'INFO', 'WARNING', 'ERROR']:
            print(f"⚠️  Invalid LOG_LEVEL: {Config.LOG_LEVEL}", file=out)
            print("   Defaulting to 'INFO'", file=out)
            Config.LOG_LEVEL = 'INFO'

        # Print config on startup
        print(f"ℹ️  Seed: {Config.WORKBENCH_SEED}", file=out)
        print(f"ℹ️  Results folder: {Config.RESULTS_FOLDER} (storage {'on' if Config.ENABLE_RESULT_STORAGE else 'off'})", file=out)
        print(f"ℹ️  Guards: brute<={Config.BRUTE_EMBED_GUARD}, enumeration<={Config.ENUMERATION_MAX_ORDER}, "
              f"dk<={Config.DK_MAX_ORDER}, workers={Config.DK_WORKERS}", file=out)
