from pythonjsonlogger import jsonlogger


CONTEXT_FIELDS = ("stage", "stimulus")


class JsonFormatter(jsonlogger.JsonFormatter):
    """JSON log lines with a ``level`` key and pipeline context.

    Records logged with ``extra={"stage": ..., "stimulus": ...}`` carry those
    values as top-level keys; both keys are always present so that batch runs
    can be grouped per stimulus downstream.

    """

    def process_log_record(self, log_record: dict) -> dict:
        log_record["level"] = log_record.pop("levelname", None)
        for field in CONTEXT_FIELDS:
            log_record.setdefault(field, None)
        return super().process_log_record(log_record)
