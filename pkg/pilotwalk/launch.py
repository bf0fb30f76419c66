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
import os
import sys

import uvicorn

from pilotwalk.server import pilotwalk_api


def start_server():
    logging.basicConfig(stream=sys.stdout, level=logging.INFO)
    uvicorn.run(pilotwalk_api, host=os.environ.get("PILOTWALK_HOST", "0.0.0.0"),
                port=int(os.environ.get("PILOTWALK_PORT", "8000")))


if __name__ == "__main__":
    start_server()
