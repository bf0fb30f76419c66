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
import configparser
import io
import logging
import os
import pathlib

from pydantic import ValidationError

from pilotwalk.models import *

logger = logging.getLogger(__name__)

_RUN_KEYS = ("command", "output_path", "workers", "workbook_path")
_SECTIONS = (PARAMS_SECTION, INTEGRATOR_SECTION, CLASSIFIER_SECTION, SIMULATE_SECTION, STABILITY_SECTION,
             SWEEP_SECTION, VELOCITY_SECTION)


class ConfigSyntaxError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        super().__init__(f"line {lineno}: {message}" if lineno is not None else message)
        self.lineno = lineno


class ConfigValueError(ValueError):
    pass


def _new_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    # keys are case sensitive (X0 and x0 are different fields)
    parser.optionxform = str
    return parser


def _read(text: str) -> configparser.ConfigParser:
    parser = _new_parser()

    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigSyntaxError(f"key outside of any section: {e.line.strip()!r}", e.lineno) from e
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ConfigSyntaxError(f"cannot parse {line.strip()!r}", lineno) from e
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
        raise ConfigSyntaxError(e.message.splitlines()[0], e.lineno) from e
    except configparser.Error as e:
        raise ConfigSyntaxError(str(e)) from e

    return parser


def _describe(error: dict) -> str:
    location = [str(part) for part in error["loc"]]
    if len(location) == 1 and location[0] in _RUN_KEYS:
        location.insert(0, RUN_SECTION)
    path = ".".join(location)
    context = error.get("ctx", {})

    match error["type"]:
        case "missing":
            return f"{path} is required"
        case "extra_forbidden":
            return f"{path} is not a recognized key"
        case "greater_than":
            return f"{path} must be > {context['gt']}"
        case "greater_than_equal":
            return f"{path} must be >= {context['ge']}"
        case "less_than":
            return f"{path} must be < {context['lt']}"
        case "less_than_equal":
            return f"{path} must be <= {context['le']}"
        case "value_error":
            message = str(context.get("error", error["msg"]))
            return f"{path}: {message}" if path else message

    return f"{path}: {error['msg']}" if path else error["msg"]


def _validation_message(error: ValidationError) -> str:
    return "; ".join(_describe(item) for item in error.errors())


def parse_config(text: str) -> RunConfig:
    """
    Parse an INI run configuration. Every section maps onto one model; unknown sections and keys are rejected and
    omitted keys take the model defaults.
    """
    parser = _read(text)
    data = {}

    for section in parser.sections():
        values = {key: value.strip() for key, value in parser[section].items() if value.strip() != ""}

        if section == RUN_SECTION:
            unknown = [key for key in values if key not in _RUN_KEYS]
            if unknown:
                raise ConfigValueError(f"{RUN_SECTION}.{unknown[0]} is not a recognized key")
            data.update(values)
        elif section in _SECTIONS:
            data[section] = values
        else:
            raise ConfigValueError(f"[{section}] is not a recognized section")

    if "command" not in data:
        raise ConfigValueError(f"{RUN_SECTION}.command is required")

    try:
        return RunConfig(**data)
    except ValidationError as e:
        raise ConfigValueError(_validation_message(e)) from e


def _format(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(_format(item) for item in value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    parser = _new_parser()

    parser[RUN_SECTION] = {key: _format(getattr(cfg, key)) for key in _RUN_KEYS if getattr(cfg, key) is not None}

    for section in _SECTIONS:
        model = getattr(cfg, section)
        if model is None:
            continue
        values = model.model_dump(mode="json", exclude_none=True)
        parser[section] = {key: _format(getattr(model, key)) for key in values}

    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def load_config(path) -> RunConfig:
    config_path = pathlib.Path(path)
    if not config_path.exists():
        raise ConfigValueError(f"config file {config_path} does not exist")

    logger.debug(f"Reading config {config_path}")
    return parse_config(config_path.read_text())


def default_config_path(command: Command | str) -> pathlib.Path:
    return pathlib.Path(__file__).resolve().parent / DEFAULT_CONFIG_DIR / f"{Command(command)}.ini"


def read_default_config(command: Command | str) -> str:
    return default_config_path(command).read_text()


def default_workers(configured: int | None = None, requested: int | None = None) -> int:
    """Worker count: the command line first, then [run] workers, then the environment, then 1."""
    if requested is not None:
        workers = requested
    elif configured is not None:
        workers = configured
    else:
        from_env = os.environ.get(WORKERS_ENV_VAR)
        if not from_env:
            return 1
        try:
            workers = int(from_env)
        except ValueError:
            raise ConfigValueError(f"{WORKERS_ENV_VAR} must be a positive integer, got {from_env!r}")

    if workers < 1:
        raise ConfigValueError(f"workers must be >= 1, got {workers}")
    return workers
