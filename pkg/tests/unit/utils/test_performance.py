import pytest

from src.utils.performance import PerformanceMonitor


class TestPerformanceMonitor:
    def test_track_records_time_and_memory(self):
        monitor = PerformanceMonitor()
        with monitor.track("quadrature"):
            sum(range(1000))
        stats = monitor.get_timing_stats("quadrature")
        assert stats["count"] == 1
        assert stats["total"] >= 0
        assert monitor.get_memory_stats()["peak"] > 0

    def test_track_records_on_error(self):
        monitor = PerformanceMonitor()
        with pytest.raises(RuntimeError):
            with monitor.track("failing"):
                raise RuntimeError("boom")
        assert monitor.get_timing_stats("failing")["count"] == 1

    def test_report(self):
        monitor = PerformanceMonitor(max_samples=2)
        for value in (1.0, 2.0, 3.0):
            monitor.record_time("limit", value)
        report = monitor.generate_report()
        assert report["timings"]["limit"]["avg"] == pytest.approx(2.5)
        assert report["samples"]["timings"] == 2
        assert monitor.get_timing_stats("missing")["count"] == 0
