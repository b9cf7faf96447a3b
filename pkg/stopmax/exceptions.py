# -*- coding: utf-8 -*-


class StopmaxError(Exception):
    pass


class DistributionSpecError(StopmaxError, ValueError):
    pass


class GameSpecError(StopmaxError, ValueError):
    pass


class ConvergenceError(StopmaxError):
    pass


class InstanceTooLargeError(StopmaxError):
    pass
