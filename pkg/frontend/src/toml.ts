/**
 * Minimal TOML subset parser, just enough for plot spec files:
 * top-level key = value pairs, [tables], [[arrays of tables]], with string,
 * number, boolean and flat-array values. No nesting beyond one table level,
 * no multi-line strings, no dates.
 */

export type TomlValue = string | number | boolean | TomlValue[] | TomlTable | TomlTable[];
export interface TomlTable {
  [key: string]: TomlValue;
}

function parseScalar(raw: string): TomlValue {
  const s = raw.trim();
  if (s.startsWith('"') && s.endsWith('"')) {
    return s.slice(1, -1).replace(/\\"/g, '"').replace(/\\\\/g, "\\");
  }
  if (s === "true") return true;
  if (s === "false") return false;
  if (s.startsWith("[") && s.endsWith("]")) {
    const inner = s.slice(1, -1).trim();
    if (inner === "") return [];
    return splitTopLevel(inner).map(parseScalar);
  }
  const num = Number(s);
  if (Number.isNaN(num) && s !== "nan") {
    throw new Error(`cannot parse TOML value: ${raw}`);
  }
  return num;
}

function splitTopLevel(s: string): string[] {
  const parts: string[] = [];
  let depth = 0;
  let inStr = false;
  let cur = "";
  for (const ch of s) {
    if (ch === '"') inStr = !inStr;
    if (!inStr) {
      if (ch === "[") depth++;
      if (ch === "]") depth--;
      if (ch === "," && depth === 0) {
        parts.push(cur);
        cur = "";
        continue;
      }
    }
    cur += ch;
  }
  if (cur.trim() !== "") parts.push(cur);
  return parts;
}

function stripComment(line: string): string {
  let inStr = false;
  for (let i = 0; i < line.length; i++) {
    if (line[i] === '"') inStr = !inStr;
    if (line[i] === "#" && !inStr) return line.slice(0, i);
  }
  return line;
}

export function parseToml(text: string): TomlTable {
  const root: TomlTable = {};
  let target: TomlTable = root;
  for (const rawLine of text.split(/\r?\n/)) {
    const line = stripComment(rawLine).trim();
    if (line === "") continue;
    const arrayHeader = line.match(/^\[\[([A-Za-z0-9_.-]+)\]\]$/);
    if (arrayHeader) {
      const key = arrayHeader[1];
      if (!Array.isArray(root[key])) root[key] = [];
      const entry: TomlTable = {};
      (root[key] as TomlTable[]).push(entry);
      target = entry;
      continue;
    }
    const tableHeader = line.match(/^\[([A-Za-z0-9_.-]+)\]$/);
    if (tableHeader) {
      const entry: TomlTable = {};
      root[tableHeader[1]] = entry;
      target = entry;
      continue;
    }
    const eq = line.indexOf("=");
    if (eq < 0) {
      throw new Error(`cannot parse TOML line: ${rawLine}`);
    }
    const key = line.slice(0, eq).trim();
    target[key] = parseScalar(line.slice(eq + 1));
  }
  return root;
}
