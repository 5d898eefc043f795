// Unit-aware value formatting and label rendering.

const UNIT_SYMBOLS: Record<string, string> = {
  seconds: "s",
  bytes: "B",
  joules: "J",
  watts: "W",
  celsius: "degC",
  ratio: "",
  count: "",
  none: "",
};

export function unitSymbol(unit: string): string {
  return UNIT_SYMBOLS[unit] ?? unit;
}

export function formatValue(value: number, unit: string): string {
  if (!Number.isFinite(value)) return String(value);
  switch (unit) {
    case "seconds":
      if (Math.abs(value) < 1) return `${round(value * 1000)} ms`;
      if (Math.abs(value) >= 3600) return `${round(value / 3600)} h`;
      if (Math.abs(value) >= 60) return `${round(value / 60)} min`;
      return `${round(value)} s`;
    case "bytes":
      return formatScaled(value, 1024, ["B", "KiB", "MiB", "GiB", "TiB"]);
    case "joules":
      if (Math.abs(value) >= 3.6e6) return `${round(value / 3.6e6)} kWh`;
      return formatScaled(value, 1000, ["J", "kJ", "MJ"]);
    case "watts":
      return formatScaled(value, 1000, ["W", "kW", "MW"]);
    case "ratio":
      return `${round(value * 100)} %`;
    case "celsius":
      return `${round(value)} degC`;
    default:
      return `${round(value)}`;
  }
}

function formatScaled(value: number, base: number, units: string[]): string {
  let scaled = value;
  let idx = 0;
  while (Math.abs(scaled) >= base && idx < units.length - 1) {
    scaled /= base;
    idx += 1;
  }
  return `${round(scaled)} ${units[idx]}`;
}

function round(value: number): string {
  if (Number.isInteger(value)) return String(value);
  const magnitude = Math.abs(value);
  const digits = magnitude >= 100 ? 0 : magnitude >= 10 ? 1 : magnitude >= 0.01 ? 2 : 4;
  return value.toFixed(digits);
}

export function labelString(labels: Record<string, string>): string {
  const keys = Object.keys(labels).sort();
  if (keys.length === 0) return "(no labels)";
  return keys.map((k) => `${k}=${labels[k]}`).join(", ");
}

export function formatAge(nowMs: number, sinceMs: number): string {
  const delta = Math.max(0, nowMs - sinceMs);
  if (delta < 60_000) return `${Math.floor(delta / 1000)}s`;
  if (delta < 3_600_000) return `${Math.floor(delta / 60_000)}m`;
  if (delta < 86_400_000) return `${Math.floor(delta / 3_600_000)}h`;
  return `${Math.floor(delta / 86_400_000)}d`;
}

export function formatClock(ms: number): string {
  return new Date(ms).toISOString().replace("T", " ").slice(0, 19);
}
