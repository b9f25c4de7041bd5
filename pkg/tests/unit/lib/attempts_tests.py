import itertools
import unittest

from unittest import mock

from liras.lib.attempts import Attempt
from liras.lib.attempts import AttemptPolicy
from liras.lib.attempts import ExponentialBackoff
from liras.lib.attempts import MaximumAttempts
from liras.lib.attempts import TimeBudget
from liras.lib.attempts import UnboundedAttempts


def _counting(time_remaining=None):
    return (Attempt(index, time_remaining) for index in itertools.count())


class AttemptPolicyTests(unittest.TestCase):
    def test_unbounded(self):
        attempts = list(itertools.islice(UnboundedAttempts(), 5))
        self.assertEqual([a.index for a in attempts], [0, 1, 2, 3, 4])
        self.assertTrue(all(a.time_remaining is None for a in attempts))

    def test_maximum_attempts(self):
        base_policy = mock.MagicMock()
        base_policy.__iter__.return_value = _counting(1.2)
        policy = MaximumAttempts(base_policy, attempts=3)

        attempts = iter(policy)
        self.assertEqual(next(attempts), Attempt(0, 1.2))
        self.assertEqual(next(attempts), Attempt(1, 1.2))
        self.assertEqual(next(attempts), Attempt(2, 1.2))
        with self.assertRaises(StopIteration):
            next(attempts)

    def test_at_least_one_attempt(self):
        with self.assertRaises(AssertionError):
            MaximumAttempts(UnboundedAttempts(), attempts=0)

    @mock.patch("time.time", autospec=True)
    def test_time_budget(self, time):
        policy = TimeBudget(UnboundedAttempts(), budget=5)

        time.return_value = 0
        attempts = iter(policy)
        self.assertEqual(next(attempts).time_remaining, 5)

        time.return_value = 3
        for _ in range(100):
            self.assertEqual(next(attempts).time_remaining, 2)

        time.return_value = 7
        with self.assertRaises(StopIteration):
            next(attempts)

    @mock.patch("time.time", autospec=True)
    def test_time_budget_always_executes_at_least_once(self, time):
        policy = TimeBudget(UnboundedAttempts(), budget=0)

        time.return_value = 0
        attempts = iter(policy)
        self.assertEqual(next(attempts), Attempt(0, 0))

        with self.assertRaises(StopIteration):
            next(attempts)

    @mock.patch("time.sleep", autospec=True)
    def test_exponential_backoff(self, sleep):
        base_policy = mock.MagicMock()
        base_policy.__iter__.return_value = _counting(0.9)
        policy = ExponentialBackoff(base_policy, base=0.1)

        attempts = iter(policy)
        next(attempts)
        self.assertEqual(sleep.call_count, 0)

        next(attempts)
        sleep.assert_called_with(0.1)

        next(attempts)
        sleep.assert_called_with(0.2)

        next(attempts)
        sleep.assert_called_with(0.4)

        next(attempts)
        sleep.assert_called_with(0.8)

        # the base policy's lower time remaining takes over here
        next(attempts)
        sleep.assert_called_with(0.9)


class ComplexPolicyTests(unittest.TestCase):
    def test_defaults_are_unbounded(self):
        self.assertIsInstance(AttemptPolicy.new(), UnboundedAttempts)

    @mock.patch("time.sleep", autospec=True)
    def test_attempts_and_backoff(self, sleep):
        policy = AttemptPolicy.new(backoff=0.2, attempts=3)
        attempts = iter(policy)

        next(attempts)

        next(attempts)
        sleep.assert_called_with(0.2)

        next(attempts)
        sleep.assert_called_with(0.4)

        with self.assertRaises(StopIteration):
            next(attempts)

    @mock.patch("time.time", autospec=True)
    @mock.patch("time.sleep", autospec=True)
    def test_budget_overrides_backoff(self, sleep, time):
        policy = AttemptPolicy.new(backoff=0.1, budget=1)

        time.return_value = 0
        attempts = iter(policy)
        self.assertAlmostEqual(next(attempts).time_remaining, 1)
        self.assertEqual(sleep.call_count, 0)

        time.return_value = 0.5
        self.assertAlmostEqual(next(attempts).time_remaining, 0.4)
        sleep.assert_called_with(0.1)

        time.return_value = 0.9
        self.assertAlmostEqual(next(attempts).time_remaining, 0)
        self.assertAlmostEqual(sleep.call_args[0][0], 0.1, places=2)

        time.return_value = 1
        with self.assertRaises(StopIteration):
            next(attempts)
