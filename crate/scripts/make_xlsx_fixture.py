"""Writes fixtures/winograd.xlsx from fixtures/winograd.grid.json.

The archive is minimal hand-written OOXML: shared strings for text cells,
one shared-formula group per column of the extrapolation block, and the
three merges of the header rows.
"""
import json
import re
import sys
import zipfile
from xml.sax.saxutils import escape

src = sys.argv[1] if len(sys.argv) > 1 else "fixtures/winograd.grid.json"
dst = sys.argv[2] if len(sys.argv) > 2 else "fixtures/winograd.xlsx"
doc = json.load(open(src))
sheet = doc["sheets"][0]

def split_ref(ref):
    m = re.fullmatch(r"([A-Z]+)(\d+)", ref)
    return m.group(1), int(m.group(2))

strings = []
def sst(text):
    if text not in strings:
        strings.append(text)
    return strings.index(text)

# E8:E11 and F8:F11 reuse the formulas of E7 and F7 as shared groups.
shared_master = {"E7": ("0", "E7:E11"), "F7": ("1", "F7:F11")}
shared_member = {f"{c}{r}": g for c, g in (("E", "0"), ("F", "1")) for r in range(8, 12)}

rows = {}
for cell in sheet["cells"]:
    col, row = split_ref(cell["ref"])
    ref = cell["ref"]
    body = ""
    attrs = f' r="{ref}"'
    if "formula" in cell:
        if ref in shared_master:
            si, rng = shared_master[ref]
            body += f'<f t="shared" ref="{rng}" si="{si}">{escape(cell["formula"])}</f>'
        elif ref in shared_member:
            body += f'<f t="shared" si="{shared_member[ref]}"/>'
        else:
            body += f"<f>{escape(cell['formula'])}</f>"
        body += f"<v>{cell['value']}</v>"
    elif cell.get("valueType") == "text":
        attrs += ' t="s"'
        body += f"<v>{sst(cell['value'])}</v>"
    else:
        body += f"<v>{cell['value']}</v>"
    rows.setdefault(row, []).append(f"<c{attrs}>{body}</c>")

sheet_data = "".join(f'<row r="{r}">{"".join(cells)}</row>' for r, cells in sorted(rows.items()))
merges = "".join(f'<mergeCell ref="{m}"/>' for m in sheet["merged"])
NS = "http://schemas.openxmlformats.org/spreadsheetml/2006/main"
REL = "http://schemas.openxmlformats.org/officeDocument/2006/relationships"
worksheet = (
    f'<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n<worksheet xmlns="{NS}">'
    f"<sheetData>{sheet_data}</sheetData>"
    f'<mergeCells count="{len(sheet["merged"])}">{merges}</mergeCells></worksheet>'
)
shared = (
    f'<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n<sst xmlns="{NS}" count="{len(strings)}" uniqueCount="{len(strings)}">'
    + "".join(f"<si><t>{escape(s)}</t></si>" for s in strings)
    + "</sst>"
)
workbook = (
    f'<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n<workbook xmlns="{NS}" xmlns:r="{REL}">'
    f'<sheets><sheet name="{sheet["name"]}" sheetId="1" r:id="rId1"/></sheets></workbook>'
)
rels = (
    '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
    '<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">'
    f'<Relationship Id="rId1" Type="{REL}/worksheet" Target="worksheets/sheet1.xml"/>'
    f'<Relationship Id="rId2" Type="{REL}/sharedStrings" Target="sharedStrings.xml"/>'
    "</Relationships>"
)
content_types = (
    '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
    '<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">'
    '<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>'
    '<Default Extension="xml" ContentType="application/xml"/>'
    '<Override PartName="/xl/workbook.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>'
    '<Override PartName="/xl/worksheets/sheet1.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>'
    '<Override PartName="/xl/sharedStrings.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sharedStrings+xml"/>'
    "</Types>"
)
root_rels = (
    '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
    '<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">'
    f'<Relationship Id="rId1" Type="{REL}/officeDocument" Target="xl/workbook.xml"/>'
    "</Relationships>"
)
with zipfile.ZipFile(dst, "w", zipfile.ZIP_DEFLATED) as z:
    for name, text in [
        ("[Content_Types].xml", content_types),
        ("_rels/.rels", root_rels),
        ("xl/workbook.xml", workbook),
        ("xl/_rels/workbook.xml.rels", rels),
        ("xl/worksheets/sheet1.xml", worksheet),
        ("xl/sharedStrings.xml", shared),
    ]:
        info = zipfile.ZipInfo(name, date_time=(2020, 1, 1, 0, 0, 0))
        info.compress_type = zipfile.ZIP_DEFLATED
        z.writestr(info, text)
