"""Convert the Topology Zoo graphs bundled with ``topohub`` into GraphML files.

Run once to (re)build ``corpus/zoo``::

    pip install topohub
    python tools/build_zoo_corpus.py corpus/zoo

The output mirrors the Topology Zoo GraphML layout (undirected graph, a
``label`` attribute per node, the network name as a graph attribute).
Coordinates and link metrics are dropped.
"""
import json
import sys
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

import topohub

HEADER = """<?xml version="1.0" encoding="utf-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">
  <key attr.name="Network" attr.type="string" for="graph" id="d0" />
  <key attr.name="label" attr.type="string" for="node" id="d1" />
  <graph edgedefault="undirected">
"""


def convert(doc, name):
    out = [HEADER, f"    <data key=\"d0\">{escape(name)}</data>\n"]
    for node in doc["nodes"]:
        out.append(f"    <node id={quoteattr(str(node['id']))}>"
                   f"<data key=\"d1\">{escape(str(node.get('name', node['id'])))}</data></node>\n")
    for edge in doc["edges"]:
        out.append(f"    <edge source={quoteattr(str(edge['source']))} "
                   f"target={quoteattr(str(edge['target']))} />\n")
    out.append("  </graph>\n</graphml>\n")
    return "".join(out)


def main(dest):
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    data_dir = Path(topohub.__file__).parent / "data" / "topozoo"
    count = 0
    for path in sorted(data_dir.glob("*.json")):
        doc = json.loads(path.read_text())
        (dest / f"{path.stem}.graphml").write_text(convert(doc, path.stem))
        count += 1
    print(f"wrote {count} topologies to {dest}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "corpus/zoo")
