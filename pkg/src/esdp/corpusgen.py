"""Synthetic corpus generators for benchmarks and pipeline testing.

The original project snapshots are not bundled, so fixtures are generated:
a desk-scale corpus with recurring API call sequences, a planted-pattern
corpus for retrieval checks, and deliberately broken corpora to exercise the
degraded-parse path. All generators are deterministic for a given seed.
"""

from __future__ import annotations

import random
from pathlib import Path

# Each template is (imports, field types, body statement lines). The {n}
# placeholder keeps identifiers unique per method so only the template's own
# call sequence recurs across blocks.
_TEMPLATES: list[tuple[list[str], list[str], list[str]]] = [
    (
        ["java.sql.Connection", "java.sql.DriverManager", "java.sql.Statement"],
        ["java.sql.Connection"],
        [
            "Connection conn{n} = DriverManager.getConnection(url{n});",
            "Statement st{n} = conn{n}.createStatement();",
            "st{n}.executeQuery(sql{n});",
            "conn{n}.close();",
        ],
    ),
    (
        ["org.xml.tools.XMLParser", "org.xml.tools.Document"],
        ["org.xml.tools.XMLParser"],
        [
            "XMLParser parser{n} = new XMLParser();",
            "Document doc{n} = parser{n}.parse(path{n});",
            "doc{n}.normalize();",
        ],
    ),
    (
        ["javax.swing.JButton", "java.awt.event.ActionListener"],
        ["javax.swing.JButton"],
        [
            "JButton button{n} = new JButton(label{n});",
            "button{n}.addActionListener(listener{n});",
            "panel{n}.add(button{n});",
        ],
    ),
    (
        ["java.io.BufferedReader", "java.io.FileReader"],
        ["java.io.BufferedReader"],
        [
            "BufferedReader reader{n} = new BufferedReader(src{n});",
            "reader{n}.readLine();",
            "reader{n}.close();",
        ],
    ),
    (
        ["java.util.ArrayList", "java.util.Iterator"],
        ["java.util.ArrayList"],
        [
            "ArrayList bag{n} = new ArrayList();",
            "bag{n}.add(value{n});",
            "bag{n}.iterator();",
        ],
    ),
    (
        ["java.util.Scanner", "java.util.InputMissmatchException"],
        ["java.util.Scanner"],
        [
            "Scanner scanner{n} = new Scanner(feed{n});",
            "try {",
            "    scanner{n}.nextInt();",
            "} catch (InputMissmatchException miss{n}) {",
            "    scanner{n}.close();",
            "}",
        ],
    ),
    (
        ["java.net.Socket", "java.io.OutputStream"],
        ["java.net.Socket"],
        [
            "Socket socket{n} = new Socket(host{n}, port{n});",
            "OutputStream out{n} = socket{n}.getOutputStream();",
            "out{n}.flush();",
            "socket{n}.close();",
        ],
    ),
    (
        ["java.util.HashMap"],
        ["java.util.HashMap"],
        [
            "HashMap index{n} = new HashMap();",
            "index{n}.put(key{n}, value{n});",
            "index{n}.get(key{n});",
        ],
    ),
]


def write_fixture_corpus(
    root: Path | str,
    files: int = 60,
    methods_per_file: int = 4,
    seed: int = 7,
) -> int:
    """Write a desk-scale corpus; returns the number of files written."""
    root = Path(root)
    rng = random.Random(seed)
    counter = 0
    for idx in range(files):
        package = f"fx.p{idx:03d}"
        class_name = f"Worker{idx:03d}"
        field_types: list[str] = []
        imports: set[str] = set()
        methods = []
        for m in range(methods_per_file):
            counter += 1
            template_imports, template_fields, statements = rng.choice(_TEMPLATES)
            imports.update(template_imports)
            if m == 0:
                field_types.extend(template_fields)
            body = [s.replace("{n}", str(counter)) for s in statements]
            if rng.random() < 0.5:
                body.append(f"audit{counter}(trace{counter});")
            params = "String input" if m % 3 == 0 else ""
            methods.append((f"task{chr(ord('A') + m)}{idx:03d}", params, body))
        lines = [f"package {package};", ""]
        for imp in sorted(imports):
            lines.append(f"import {imp};")
        lines.append("")
        lines.append(f"public class {class_name} {{")
        for fi, ftype in enumerate(field_types):
            simple = ftype.rsplit(".", 1)[-1]
            lines.append(f"    private {simple} state{fi};")
        for name, params, body in methods:
            lines.append(f"    public void {name}({params}) {{")
            lines.extend(f"        {s}" for s in body)
            lines.append("    }")
        lines.append("}")
        target = root / f"p{idx:03d}" / f"{class_name}.java"
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return files


PLANTED_CALLS = ("getConnection", "createStatement", "executeQuery")


def write_planted_corpus(
    root: Path | str,
    blocks: int = 20,
    planted: int = 8,
    seed: int = 3,
) -> list[tuple[str, str]]:
    """Write ``blocks`` single-method classes; ``planted`` of them share one
    three-call sequence. Returns the planted (kind, name) items."""
    if planted > blocks:
        raise ValueError("cannot plant into more blocks than exist")
    root = Path(root)
    rng = random.Random(seed)
    for idx in range(blocks):
        package = f"plant.p{idx:02d}"
        class_name = f"Job{idx:02d}"
        body: list[str] = []
        if idx < planted:
            body.append(f"prelude{idx}(seed{idx});")
            body.append(f"pool.getConnection(cfg{idx});")
            if rng.random() < 0.5:
                body.append(f"between{idx}(mark{idx});")
            body.append(f"pool.createStatement(opts{idx});")
            body.append(f"pool.executeQuery(sql{idx});")
            body.append(f"coda{idx}(tail{idx});")
        else:
            for s in range(3):
                body.append(f"routine{idx}x{s}(arg{idx}x{s});")
        lines = [f"package {package};", "", f"class {class_name} {{",
                 "    void run() {"]
        lines.extend(f"        {s}" for s in body)
        lines.extend(["    }", "}"])
        target = root / f"{class_name}.java"
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [("MI", f"{call}(arity=1):?") for call in PLANTED_CALLS]


_BREAKAGES = ("drop_close_brace", "drop_open_brace", "unterminated_string",
              "unterminated_comment", "junk")


def write_random_corpus(
    root: Path | str,
    files: int = 5,
    seed: int = 0,
    broken_ratio: float = 0.3,
) -> int:
    """Write a randomized corpus where some files are deliberately damaged."""
    root = Path(root)
    rng = random.Random(seed)
    counter = 0
    for idx in range(files):
        counter += 1
        package = f"rnd.p{idx}"
        class_name = f"Gen{idx}"
        method_count = rng.randint(0, 3)
        lines = [f"package {package};", f"class {class_name} {{"]
        for m in range(method_count):
            lines.append(f"    void act{m}() {{")
            for s in range(rng.randint(0, 4)):
                choice = rng.randint(0, 3)
                if choice == 0:
                    lines.append(f"        step{idx}x{m}x{s}(v{s});")
                elif choice == 1:
                    lines.append(f"        Widget{s} w{s} = new Widget{s}();")
                elif choice == 2:
                    lines.append(f'        log.write("evt {s}");')
                else:
                    lines.append(f"        target.field{s};")
            lines.append("    }")
        lines.append("}")
        text = "\n".join(lines) + "\n"
        if rng.random() < broken_ratio:
            breakage = rng.choice(_BREAKAGES)
            if breakage == "drop_close_brace":
                text = text.replace("}", "", 1)
            elif breakage == "drop_open_brace":
                text = text.replace("{", "", 1)
            elif breakage == "unterminated_string":
                text += 'class Tail { String s = "never closed; }\n'
            elif breakage == "unterminated_comment":
                text += "/* trailing comment never closed\n"
            else:
                text += ")]}{ %% @@ junk ;; ((\n"
        target = root / f"{class_name}.java"
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    return files
