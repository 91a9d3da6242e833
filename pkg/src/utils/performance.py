import time
from collections import deque
from contextlib import contextmanager

import numpy as np
import psutil


class PerformanceMonitor:
    """Record wall time and memory of labelled computations"""

    def __init__(self, max_samples=1000):
        self.timings = {}
        self.memory_usage = deque(maxlen=max_samples)
        self.max_samples = max_samples
        self.process = psutil.Process()

    def record_time(self, label, time_ms):
        """Record an elapsed time for a label"""
        self.timings.setdefault(label, deque(maxlen=self.max_samples)).append(time_ms)

    @contextmanager
    def track(self, label):
        """Time the enclosed block and sample memory afterwards"""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.record_time(label, (time.perf_counter() - start) * 1000)
            self.record_memory_usage()

    def record_memory_usage(self):
        """Record current resident memory"""
        mem_info = self.process.memory_info()
        self.memory_usage.append(mem_info.rss / 1024 / 1024)  # MB

    def get_timing_stats(self, label):
        """Get statistics about the times recorded for one label"""
        if not self.timings.get(label):
            return {"min": 0, "max": 0, "avg": 0, "total": 0, "count": 0}

        times = np.array(self.timings[label])
        return {
            "min": float(np.min(times)),
            "max": float(np.max(times)),
            "avg": float(np.mean(times)),
            "total": float(np.sum(times)),
            "count": int(times.size),
        }

    def get_memory_stats(self):
        """Get statistics about memory usage"""
        if not self.memory_usage:
            return {"current": 0, "peak": 0, "avg": 0}

        usage = np.array(self.memory_usage)
        return {
            "current": float(usage[-1]),
            "peak": float(np.max(usage)),
            "avg": float(np.mean(usage)),
        }

    def generate_report(self):
        """Generate a report of all timings and memory samples"""
        return {
            "timings": {label: self.get_timing_stats(label) for label in self.timings},
            "memory": self.get_memory_stats(),
            "samples": {
                "timings": sum(len(v) for v in self.timings.values()),
                "memory": len(self.memory_usage),
            },
        }
