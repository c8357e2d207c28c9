/** Minimal ASCII OBJ parsing for the exported assembly (g-grouped). */

export interface ObjGroup {
  name: string;
  /** flat xyz triples, one triangle per 9 values */
  positions: Float32Array;
}

export function parseObj(text: string): ObjGroup[] {
  const vertices: number[][] = [];
  const groups: { name: string; faces: number[][] }[] = [];
  let current: { name: string; faces: number[][] } | null = null;

  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line || line.startsWith("#")) continue;
    const tokens = line.split(/\s+/);
    if (tokens[0] === "v") {
      vertices.push([Number(tokens[1]), Number(tokens[2]), Number(tokens[3])]);
    } else if (tokens[0] === "g") {
      current = { name: tokens.slice(1).join(" ") || `group${groups.length}`, faces: [] };
      groups.push(current);
    } else if (tokens[0] === "f") {
      if (!current) {
        current = { name: `group${groups.length}`, faces: [] };
        groups.push(current);
      }
      const idx = tokens.slice(1).map((t) => {
        const i = parseInt(t.split("/")[0], 10);
        return i > 0 ? i - 1 : vertices.length + i;
      });
      for (let k = 1; k + 1 < idx.length; k++) {
        current.faces.push([idx[0], idx[k], idx[k + 1]]);
      }
    }
  }

  return groups.map((g) => {
    const positions = new Float32Array(g.faces.length * 9);
    let o = 0;
    for (const [a, b, c] of g.faces) {
      for (const vi of [a, b, c]) {
        const v = vertices[vi];
        positions[o++] = v[0];
        positions[o++] = v[1];
        positions[o++] = v[2];
      }
    }
    return { name: g.name, positions };
  });
}

export function boundingRadius(groups: ObjGroup[]): number {
  let lo = [Infinity, Infinity, Infinity];
  let hi = [-Infinity, -Infinity, -Infinity];
  for (const g of groups) {
    for (let i = 0; i < g.positions.length; i += 3) {
      for (let k = 0; k < 3; k++) {
        lo[k] = Math.min(lo[k], g.positions[i + k]);
        hi[k] = Math.max(hi[k], g.positions[i + k]);
      }
    }
  }
  if (!isFinite(lo[0])) return 1;
  return Math.hypot(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) / 2;
}
