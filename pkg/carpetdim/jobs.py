"""
Gerenciador de jobs em memória.
Distribui tarefas independentes (pontos de partida, ramos da expansão)
entre threads via dask e registra o status de cada uma.
"""
import logging
import uuid
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import dask

from .models import JobInfo, JobStatus

logger = logging.getLogger(__name__)


class JobManager:
    """Executor de tarefas com registro de status (para uso local)."""

    def __init__(self, threads: int = 1):
        self.threads = max(1, int(threads))
        self._jobs: Dict[str, JobInfo] = {}

    def create_job(self, label: str) -> str:
        """Registra uma tarefa e retorna o job_id."""
        job_id = str(uuid.uuid4())[:8]
        self._jobs[job_id] = JobInfo(
            job_id=job_id,
            label=label,
            status=JobStatus.PENDING,
            order=len(self._jobs),
            message="Aguardando execução...",
        )
        return job_id

    def get_job(self, job_id: str) -> Optional[JobInfo]:
        return self._jobs.get(job_id)

    def update_job(self, job_id: str, status: Optional[JobStatus] = None, message: Optional[str] = None):
        job = self._jobs.get(job_id)
        if not job:
            return
        if status is not None:
            job.status = status
        if message is not None:
            job.message = message

    def list_jobs(self) -> List[JobInfo]:
        """Tarefas na ordem de submissão."""
        return sorted(self._jobs.values(), key=lambda j: j.order)

    def _wrap(self, job_id: str, func: Callable[[], Any]) -> Callable[[], Any]:
        def runner():
            self.update_job(job_id, status=JobStatus.RUNNING, message="Executando...")
            try:
                result = func()
            except Exception as e:
                self.update_job(job_id, status=JobStatus.FAILED, message=str(e))
                logger.error(f"Job {job_id} falhou: {e}", exc_info=True)
                raise
            self.update_job(job_id, status=JobStatus.COMPLETED, message="Concluído.")
            return result

        return runner

    def run(self, tasks: Sequence[Tuple[str, Callable[[], Any]]]) -> List[Any]:
        """
        Executa as tarefas e devolve os resultados na ordem de submissão.

        Com threads <= 1 usa o escalonador síncrono do dask.
        """
        job_ids = [self.create_job(label) for label, _ in tasks]
        delayed = [
            dask.delayed(self._wrap(job_id, func), pure=False)()
            for job_id, (_, func) in zip(job_ids, tasks)
        ]
        if not delayed:
            return []
        if self.threads > 1:
            results = dask.compute(*delayed, scheduler="threads", num_workers=self.threads)
        else:
            results = dask.compute(*delayed, scheduler="sync")
        logger.debug(f"{len(results)} jobs concluídos com {self.threads} thread(s).")
        return list(results)
