import { describe, expect, it, vi } from "vitest";

import { renderParamForm, renderPortfolio } from "../src/portfolio";
import type { PluginDescriptor } from "../src/types";

const WINDOW_PARAMS = [
  { name: "subject", type: "string" as const, required: true, default: null },
  { name: "channel", type: "string" as const, required: true, default: null },
  { name: "t0", type: "int" as const, required: true, default: null },
  { name: "t1", type: "int" as const, required: true, default: null },
];

const BUILTINS: PluginDescriptor[] = [
  { id: "daily_aggregate", name: "Daily aggregate", description: "per-day stats", param_schema: WINDOW_PARAMS },
  { id: "histogram", name: "Value histogram", description: "distribution", param_schema: WINDOW_PARAMS },
  { id: "sheet", name: "Sheet", description: "raw rows", param_schema: WINDOW_PARAMS },
  {
    id: "timeseries_line",
    name: "Time-series line",
    description: "downsampled line",
    param_schema: [
      ...WINDOW_PARAMS,
      { name: "max_points", type: "int", required: false, default: 1000 },
      { name: "mode", type: "enum", required: false, default: "mean", choices: ["mean", "minmax"] },
    ],
  },
];

function setValue(form: HTMLFormElement, name: string, value: string): void {
  const field = form.querySelector<HTMLInputElement>(`[name="${name}"]`)!;
  field.value = value;
  field.dispatchEvent(new Event("input", { bubbles: true }));
}

describe("renderPortfolio", () => {
  it("renders one card per plugin with its description", () => {
    const view = renderPortfolio(BUILTINS, () => {});
    const cards = view.querySelectorAll(".plugin-card");
    expect(cards).toHaveLength(4);
    expect(view.textContent).toContain("per-day stats");
  });

  it("opens the clicked plugin", () => {
    const onOpen = vi.fn();
    const view = renderPortfolio(BUILTINS, onOpen);
    view.querySelector<HTMLButtonElement>('[data-plugin-id="sheet"]')!.click();
    expect(onOpen).toHaveBeenCalledWith(BUILTINS[2]);
  });
});

describe("renderParamForm", () => {
  it("generates a field per schema entry and gates fetch on required params", () => {
    const onFetch = vi.fn();
    const { element } = renderParamForm(BUILTINS[3], onFetch);
    expect(element.querySelectorAll(".param-row")).toHaveLength(6);
    const fetchButton = element.querySelector<HTMLButtonElement>("button[type=submit]")!;
    expect(fetchButton.disabled).toBe(true); // required window params empty

    setValue(element, "subject", "s1");
    setValue(element, "channel", "knee_flex");
    setValue(element, "t0", "0");
    expect(fetchButton.disabled).toBe(true);
    setValue(element, "t1", "10000");
    expect(fetchButton.disabled).toBe(false);

    element.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    expect(onFetch).toHaveBeenCalledWith({
      subject: "s1",
      channel: "knee_flex",
      t0: "0",
      t1: "10000",
      max_points: "1000",
      mode: "mean",
    });
  });

  it("renders enum params as selects preset to their default", () => {
    const { element } = renderParamForm(BUILTINS[3], () => {});
    const select = element.querySelector<HTMLSelectElement>('select[name="mode"]')!;
    expect(select).not.toBeNull();
    expect(select.value).toBe("mean");
    expect([...select.options].map((o) => o.value)).toEqual(["mean", "minmax"]);
  });

  it("shows server-side parameter errors inline", () => {
    const rendered = renderParamForm(BUILTINS[3], () => {});
    rendered.showErrors([{ item: "t0", reason: "expected int" }]);
    const slot = rendered.element.querySelector<HTMLElement>(
      '[data-param="t0"] .param-error',
    )!;
    expect(slot.hidden).toBe(false);
    expect(slot.textContent).toBe("expected int");
  });
});
