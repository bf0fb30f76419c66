# Copyright 2024 Magnopus LLC

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     https://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import logging
from threading import Lock, Thread

from pilotwalk.models import *
from pilotwalk.sweep import run_lowmem_sweep, run_sweep

logger = logging.getLogger(__name__)


class SweepJob(Thread):
    def __init__(self, spec: SweepSpec, workers, finished_callback):
        super().__init__(daemon=True)
        self.spec = spec
        self.workers = workers
        self._finished_callback = finished_callback

        rows, columns = spec.shape
        self.total = rows * columns
        self.done = 0
        self.result: SweepResult | None = None
        self.error: str | None = None

    def run(self):
        logger.info(f"Beginning background sweep of {self.total} cells over the {self.spec.plane} plane")

        try:
            if self.spec.system is SystemKind.LOWMEM:
                self.result = run_lowmem_sweep(self.spec, self.workers, self.update_progress)
            else:
                self.result = run_sweep(self.spec, self.workers, self.update_progress)
        except Exception as e:
            self.error = f"{type(e).__name__}: {e}"
            logger.error(f"Background sweep failed: {self.error}")

        # Tell the SweepSessionManager we're done, so it's free to start another sweep
        self._finished_callback(self)

    def update_progress(self, done, total):
        self.done = done


class SweepSessionManager:
    def __init__(self):
        self._current_job: SweepJob | None = None
        self._last_job: SweepJob | None = None
        self._lock = Lock()

    def get_status(self) -> SweepJobStatus:
        with self._lock:
            if self._current_job is not None:
                job = self._current_job
                return SweepJobStatus(status=SweepStatus.RUNNING, done=job.done, total=job.total)

            job = self._last_job

        if job is None:
            return SweepJobStatus(status=SweepStatus.IDLE)
        elif job.error is not None:
            return SweepJobStatus(status=SweepStatus.FAILED, done=job.done, total=job.total, error=job.error)
        else:
            return SweepJobStatus(status=SweepStatus.FINISHED, done=job.done, total=job.total)

    def is_running(self) -> bool:
        with self._lock:
            return self._current_job is not None

    def start_sweep(self, spec: SweepSpec, workers: int = 1) -> bool:
        with self._lock:
            if self._current_job is not None:
                return False

            self._current_job = SweepJob(spec, workers, self._job_finished)
            self._current_job.start()
            return True

    def last_result(self) -> SweepResult | None:
        with self._lock:
            if self._last_job is None:
                return None
            return self._last_job.result

    def wait(self, timeout=None):
        with self._lock:
            job = self._current_job
        # joined outside the lock, the finishing job takes it in _job_finished
        if job is not None:
            job.join(timeout)

    def _job_finished(self, job: SweepJob):
        with self._lock:
            self._last_job = job
            self._current_job = None
