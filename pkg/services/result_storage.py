"""
Result Storage Service
Experiment results as JSON (+ optional CSV table) under RESULTS_FOLDER, keyed by run id
"""

import csv
import json
import os
import threading
import time
import uuid
from datetime import datetime, timedelta
from typing import Any, Dict, List, Optional, Sequence

from werkzeug.utils import secure_filename

from config import Config


def new_run_id() -> str:
    return f"{datetime.utcnow().strftime('%Y%m%dT%H%M%S')}-{uuid.uuid4().hex[:8]}"


class ResultStorageService:
    def __init__(self, folder: Optional[str] = None):
        self.results_folder = folder or Config.RESULTS_FOLDER
        os.makedirs(self.results_folder, exist_ok=True)
        print(f"✅ Result Storage: Filesystem ({self.results_folder})")

    def _path(self, run_id: str, ext: str) -> str:
        return os.path.join(self.results_folder, f"{secure_filename(run_id)}.{ext}")

    def save_result(self, payload: Dict[str, Any], name: str = "", run_id: Optional[str] = None,
                    csv_rows: Optional[List[Dict[str, Any]]] = None,
                    csv_fields: Optional[Sequence[str]] = None) -> dict:
        """
        Save a JSON result (and a CSV table when rows are given)
        Returns: Storage metadata
        """
        run_id = run_id or new_run_id()
        if name:
            run_id = f"{run_id}_{secure_filename(name)}"
        try:
            json_path = self._path(run_id, 'json')
            with open(json_path, 'w', encoding='utf-8') as f:
                json.dump({'run_id': run_id, 'saved_at': datetime.utcnow().isoformat(), 'result': payload},
                          f, indent=2)
            meta = {'stored': True, 'run_id': run_id, 'json_path': json_path}

            if csv_rows is not None:
                csv_path = self._path(run_id, 'csv')
                fields = list(csv_fields) if csv_fields else (list(csv_rows[0]) if csv_rows else [])
                with open(csv_path, 'w', encoding='utf-8', newline='') as f:
                    writer = csv.DictWriter(f, fieldnames=fields)
                    writer.writeheader()
                    writer.writerows(csv_rows)
                meta['csv_path'] = csv_path
            return meta
        except OSError as e:
            print(f"❌ Result save error: {e}")
            return {'stored': False, 'run_id': run_id, 'error': str(e)}

    def get_result(self, run_id: str) -> Optional[Dict[str, Any]]:
        path = self._path(run_id, 'json')
        if not os.path.exists(path):
            return None
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            print(f"❌ Result retrieval error: {e}")
            return None

    def get_csv(self, run_id: str) -> Optional[str]:
        path = self._path(run_id, 'csv')
        if not os.path.exists(path):
            return None
        with open(path, 'r', encoding='utf-8') as f:
            return f.read()

    def list_results(self) -> List[str]:
        return sorted(f[:-5] for f in os.listdir(self.results_folder) if f.endswith('.json'))

    def delete_result(self, run_id: str) -> bool:
        deleted = False
        for ext in ('json', 'csv'):
            path = self._path(run_id, ext)
            if os.path.exists(path):
                os.remove(path)
                deleted = True
        return deleted

    def cleanup_old_files(self, days: int = None) -> int:
        """
        Delete result files older than specified days
        """
        if days is None:
            days = Config.RESULT_RETENTION_DAYS

        cutoff_date = datetime.now() - timedelta(days=days)
        count = 0
        try:
            for filename in os.listdir(self.results_folder):
                file_path = os.path.join(self.results_folder, filename)
                if os.path.isfile(file_path):
                    file_time = datetime.fromtimestamp(os.path.getmtime(file_path))
                    if file_time < cutoff_date:
                        os.remove(file_path)
                        count += 1
            print(f"🗑️ Cleaned {count} old result files")
        except OSError as e:
            print(f"❌ Cleanup error: {e}")
        return count


def start_cleanup_scheduler():

    def run():
        time.sleep(60)  # Wait for server to fully boot
        while True:
            try:
                get_storage().cleanup_old_files(days=Config.RESULT_RETENTION_DAYS)
            except Exception as e:
                print(f"❌ Cleanup scheduler error: {e}")
            time.sleep(24 * 60 * 60)

    thread = threading.Thread(target=run, daemon=True, name="ResultCleanupScheduler")
    thread.start()
    print(f"🕐 Result cleanup scheduler started (every 24h, retention={Config.RESULT_RETENTION_DAYS} day(s))")
    return thread


_storage_service = None


def get_storage() -> ResultStorageService:
    """Get result storage service instance"""
    global _storage_service
    if _storage_service is None:
        _storage_service = ResultStorageService()
    return _storage_service
