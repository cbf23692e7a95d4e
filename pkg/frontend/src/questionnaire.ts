// Generic questionnaire forms: instrument ids and response ranges mirror the
// engine's registry; item wording is supplied by the clinic, not shipped.

export interface InstrumentDef {
  id: string;
  title: string;
  nItems: number;
  lo: number;
  hi: number;
  text?: boolean;
}

export const INSTRUMENTS: InstrumentDef[] = [
  { id: "fatigue", title: "Fatigue scale", nItems: 11, lo: 0, hi: 3 },
  { id: "imi", title: "Motivation inventory", nItems: 7, lo: 1, hi: 7 },
  { id: "nasa_tlx_raw", title: "Workload (raw)", nItems: 6, lo: 0, hi: 100 },
  { id: "stress", title: "Perceived stress", nItems: 20, lo: 1, hi: 4 },
  { id: "confidence", title: "Confidence", nItems: 1, lo: 1, hi: 5 },
  { id: "stimulant_text", title: "Stimulant consumption", nItems: 1, lo: 0, hi: 0, text: true },
  { id: "interface_name", title: "Interface used", nItems: 1, lo: 0, hi: 0, text: true },
  { id: "daily_usage", title: "Daily interface usage", nItems: 1, lo: 0, hi: 0, text: true },
];

export function validateResponses(
  def: InstrumentDef,
  responses: (number | string)[],
): string | null {
  if (def.text) {
    return responses.every((r) => typeof r === "string") ? null : "expected text";
  }
  if (responses.length !== def.nItems) {
    return `expected ${def.nItems} responses`;
  }
  for (const r of responses) {
    if (typeof r !== "number" || !Number.isInteger(r) || r < def.lo || r > def.hi) {
      return `responses must be integers in [${def.lo}, ${def.hi}]`;
    }
  }
  return null;
}
