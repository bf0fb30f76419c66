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
import pathlib
import shutil
from datetime import datetime

from openpyxl import Workbook, load_workbook
from openpyxl.styles import Font, PatternFill

from pilotwalk.models import *
from pilotwalk.output_utils import sweep_frame

CLASS_COLORS = {
    BehaviorClass.STATIONARY: STATIONARY_COLOR,
    BehaviorClass.BACK_AND_FORTH: BACK_AND_FORTH_COLOR,
    BehaviorClass.RUNAWAY: RUNAWAY_COLOR,
    BehaviorClass.IRREGULAR: IRREGULAR_COLOR,
}

# Excel limit on sheet title length
MAX_SHEET_TITLE = 31


class SweepWorkbookWriter:
    def __init__(self, workbook_path):
        self.workbookPath = pathlib.Path(workbook_path)

        if not self.workbookPath.exists():
            self.workbookPath.parent.mkdir(parents=True, exist_ok=True)
            self.workbook = Workbook()
            self.workbook.remove(self.workbook.active)
            self._empty = True
        else:
            self.workbook = load_workbook(self.workbookPath)
            self._empty = False

    def create_sheet(self, sheet_name, header):
        """A fresh sheet with a frozen header row. An existing sheet of that name is replaced."""
        title = sheet_name[:MAX_SHEET_TITLE]

        if title in self.workbook.sheetnames:
            self.workbook.remove(self.workbook[title])

        sheet = self.workbook.create_sheet(title)
        sheet.append([label_to_title(column) for column in header])
        sheet.freeze_panes = "A2"

        fill = PatternFill(start_color=HEADER_COLOR, end_color=HEADER_COLOR, fill_type="solid")
        for cell in sheet[1]:
            cell.fill = fill
            cell.font = Font(bold=True)

        return sheet

    def create_backup(self):
        if self._empty:
            return None

        backup_dir_path = self.workbookPath.parent / "Workbook_Backups"
        backup_dir_path.mkdir(parents=True, exist_ok=True)

        date_string = datetime.now().strftime("%Y-%m-%d_%H-%M-%S")
        backup_workbook_path = backup_dir_path / f"{self.workbookPath.stem}_{date_string}.xlsx"

        shutil.copy2(self.workbookPath, backup_workbook_path)
        return backup_workbook_path

    def add_sweep(self, result: SweepResult, sheet_name: str, create_backup=True):
        if create_backup:
            self.create_backup()

        frame = sweep_frame(result)
        sheet = self.create_sheet(sheet_name, list(frame.columns))
        class_column = list(frame.columns).index(CLASS_COL)

        for cell in result.flat_cells():
            sheet.append([
                cell.axis1,
                cell.axis2,
                str(cell.behavior) if cell.behavior is not None else None,
                cell.avg_speed,
                cell.lle,
                cell.well_hops,
                cell.error,
            ])

            color = CLASS_COLORS.get(cell.behavior, FAILED_COLOR)
            sheet.cell(row=sheet.max_row, column=class_column + 1).fill = PatternFill(
                start_color=color, end_color=color, fill_type="solid")

        self.workbook.save(self.workbookPath)
        self._empty = False
