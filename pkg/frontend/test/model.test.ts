import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { collectObservation, debounce, parseCountsCsv } from "../src/model.js";

describe("parseCountsCsv", () => {
  it("parses arm,label,count rows and keeps arm order of first appearance", () => {
    const text = [
      "embryo,hepatocyte,12",
      "embryo,stellate,3",
      "adult,hepatocyte,7",
      "embryo,kupffer,5",
    ].join("\n");
    const parsed = parseCountsCsv(text);
    expect(parsed.arms).toEqual(["embryo", "adult"]);
    expect(parsed.counts).toEqual({
      embryo: { hepatocyte: 12, stellate: 3, kupffer: 5 },
      adult: { hepatocyte: 7 },
    });
  });

  it("defaults a missing count to 1 and accumulates repeats", () => {
    const parsed = parseCountsCsv("a,x\na,x\na,x,3");
    expect(parsed.counts["a"]).toEqual({ x: 5 });
  });

  it("skips a header row and blank lines", () => {
    const parsed = parseCountsCsv("arm,label,count\n\n  \na,x,2\n");
    expect(parsed.arms).toEqual(["a"]);
    expect(parsed.counts["a"]).toEqual({ x: 2 });
  });

  it("reports the 1-based line number of a malformed row", () => {
    expect(() => parseCountsCsv("a,x,1\nonly-one-cell")).toThrow("line 2: expected arm,label[,count]");
    expect(() => parseCountsCsv("a,x,1\n,x,1")).toThrow("line 2: empty arm or label");
    expect(() => parseCountsCsv("a,x,1\nb,,4")).toThrow("line 2: empty arm or label");
  });

  it("rejects counts that are not positive integers", () => {
    for (const bad of ["0", "-1", "2.5", "1e3", "abc"]) {
      expect(() => parseCountsCsv(`a,x,${bad}`)).toThrow(/count must be a positive integer/);
    }
    // padding is trimmed, not rejected
    expect(parseCountsCsv("a,x, 3 ").counts["a"]).toEqual({ x: 3 });
  });

  it("rejects input with no data rows", () => {
    expect(() => parseCountsCsv("")).toThrow("no data rows");
    expect(() => parseCountsCsv("arm,label,count\n\n")).toThrow("no data rows");
  });

  it("handles a 4-arm paste the size the advisor sees in practice", () => {
    const lines: string[] = [];
    for (const arm of ["w", "x", "y", "z"]) {
      for (let i = 0; i < 10; i++) lines.push(`${arm},${arm}-type-${i},5`);
    }
    const parsed = parseCountsCsv(lines.join("\r\n"));
    expect(parsed.arms).toHaveLength(4);
    for (const arm of parsed.arms) {
      const total = Object.values(parsed.counts[arm]!).reduce((s, c) => s + c, 0);
      expect(total).toBe(50);
    }
  });
});

describe("collectObservation", () => {
  it("builds counts from filled rows, skipping fully blank ones", () => {
    const counts = collectObservation([
      { label: "hepatocyte", count: "9" },
      { label: "", count: "" },
      { label: "kupffer", count: "6" },
      { label: "hepatocyte", count: "1" },
    ]);
    expect(counts).toEqual({ hepatocyte: 10, kupffer: 6 });
  });

  it("rejects a count without a label", () => {
    expect(() => collectObservation([{ label: "", count: "4" }])).toThrow(
      "a row has a count but no label",
    );
  });

  it("rejects malformed counts before anything reaches the server", () => {
    for (const bad of ["0", "-2", "1.5", "many", ""]) {
      expect(() => collectObservation([{ label: "x", count: bad }])).toThrow(
        'count for "x" must be a positive integer',
      );
    }
  });

  it("rejects an empty batch", () => {
    expect(() => collectObservation([])).toThrow("enter at least one label");
    expect(() => collectObservation([{ label: " ", count: "" }])).toThrow("enter at least one label");
  });
});

describe("debounce", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("fires once on the trailing edge with the last arguments", () => {
    const calls: number[] = [];
    const push = debounce((m: number) => calls.push(m), 250);
    push(10);
    push(20);
    push(30);
    vi.advanceTimersByTime(249);
    expect(calls).toEqual([]);
    vi.advanceTimersByTime(1);
    expect(calls).toEqual([30]);
  });

  it("caps a burst of slider events at one request per window", () => {
    const calls: number[] = [];
    const push = debounce((m: number) => calls.push(m), 250);
    // 40 input events over one second, as a fast slider drag produces
    for (let t = 0; t < 40; t++) {
      push(t);
      vi.advanceTimersByTime(25);
    }
    vi.advanceTimersByTime(250);
    expect(calls.length).toBeLessThanOrEqual(4);
    expect(calls[calls.length - 1]).toBe(39);
  });

  it("fires separately for spaced calls", () => {
    const calls: number[] = [];
    const push = debounce((m: number) => calls.push(m), 250);
    push(1);
    vi.advanceTimersByTime(300);
    push(2);
    vi.advanceTimersByTime(300);
    expect(calls).toEqual([1, 2]);
  });
});
