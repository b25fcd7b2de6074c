"""
Background threads for independent trials and horizons
"""

import logging
import queue
from queue import Queue
from threading import Event, Lock, Thread
from typing import Any, Callable, Sequence

logger = logging.getLogger(__name__)

# seconds a worker waits on an empty queue, and between stop-event checks in run_ordered
QUEUE_TIMEOUT = 0.1


class TrialThread(Thread):
    """
    Background thread that drains a queue of (index, task) work items

    Each result is stored under its submission index so callers can restore
    submission order. The first failing task sets the shared stop event, which
    makes every worker finish its current item and exit.
    """

    def __init__(
        self,
        work_queue: Queue,
        results: dict[int, tuple[bool, Any]],
        results_lock: Lock,
        stop_evt: Event,
        name: str = 'TrialThread',
    ):
        super().__init__(daemon=True, name=name)
        self.work_queue = work_queue
        self.results = results
        self.results_lock = results_lock
        self.stop_evt = stop_evt
        self.completed = 0

    def stop(self) -> None:
        """Stop the thread and wait for it to finish its current item"""
        logger.info(f"Stopping {self.name}...")
        self.stop_evt.set()
        self.join(timeout=30)
        if self.is_alive():
            logger.warning(f"{self.name} did not stop within timeout")
        else:
            logger.info(f"{self.name} stopped successfully")

    def run(self) -> None:
        """Main loop: take work items until the queue is empty or stop is requested"""
        logger.debug(f"{self.name} started")

        try:
            while not self.stop_evt.is_set():
                try:
                    index, task = self.work_queue.get(timeout=QUEUE_TIMEOUT)
                except queue.Empty:
                    break
                self._run_item(index, task)

        except Exception as e:
            logger.error(f"Unexpected error in {self.name}: {e}", exc_info=True)
            self.stop_evt.set()

        finally:
            logger.debug(f"{self.name} finished after {self.completed} items")

    def _run_item(self, index: int, task: Callable[[], Any]) -> None:
        try:
            outcome = (True, task())
        except Exception as e:
            logger.error(f"Task {index} failed in {self.name}: {e}", exc_info=True)
            outcome = (False, e)
            self.stop_evt.set()
        with self.results_lock:
            self.results[index] = outcome
        self.completed += 1


def run_ordered(tasks: Sequence[Callable[[], Any]], threads: int = 1) -> list[Any]:
    """Run independent tasks, returning results in submission order

    With threads <= 1 the tasks run inline. Otherwise up to `threads` workers
    share a queue; the failure with the lowest index is re-raised.
    """
    if threads <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]

    work_queue: Queue = Queue()
    for index, task in enumerate(tasks):
        work_queue.put((index, task))

    results: dict[int, tuple[bool, Any]] = {}
    results_lock = Lock()
    stop_evt = Event()
    workers = [
        TrialThread(work_queue, results, results_lock, stop_evt, name=f'TrialThread-{i}')
        for i in range(min(threads, len(tasks)))
    ]
    logger.info(f"Running {len(tasks)} tasks on {len(workers)} threads")

    for worker in workers:
        worker.start()
    while any(worker.is_alive() for worker in workers) and not stop_evt.wait(timeout=QUEUE_TIMEOUT):
        pass
    if stop_evt.is_set():
        logger.warning("A task failed, stopping the remaining workers")
        for worker in workers:
            worker.stop()
    for worker in workers:
        worker.join()

    failures = sorted(
        (index, outcome[1]) for index, outcome in results.items() if not outcome[0]
    )
    if failures:
        raise failures[0][1]
    return [results[index][1] for index in range(len(tasks))]
