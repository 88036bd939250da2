"""
lrlab Parallel Map
Order-preserving map over a capped thread pool, with an optional tqdm progress bar
"""

from concurrent.futures import ThreadPoolExecutor

from tqdm import tqdm

from lrlab import config


def parallel_map(fn, items, jobs=None, desc=None):
    """Apply fn to every item; results come back in input order whatever the worker count"""
    items = list(items)
    jobs = config.worker_cap(jobs)
    if jobs <= 1:
        iterator = map(fn, items)
        if desc:
            iterator = tqdm(iterator, total=len(items), desc=desc)
        return list(iterator)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        iterator = pool.map(fn, items)
        if desc:
            iterator = tqdm(iterator, total=len(items), desc=desc)
        return list(iterator)
