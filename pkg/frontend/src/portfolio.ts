import type { ParamSpec, PluginDescriptor } from "./types";

export interface RenderedParamForm {
  element: HTMLFormElement;
  collect(): Record<string, string>;
  showErrors(issues: { item: string; reason: string }[]): void;
}

/** Plugin cards with names and descriptions; clicking one opens its
 * parameter form. */
export function renderPortfolio(
  descriptors: PluginDescriptor[],
  onOpen: (descriptor: PluginDescriptor) => void,
): HTMLElement {
  const container = document.createElement("div");
  container.className = "portfolio";
  for (const descriptor of descriptors) {
    const card = document.createElement("button");
    card.type = "button";
    card.className = "plugin-card";
    card.dataset.pluginId = descriptor.id;
    const name = document.createElement("strong");
    name.textContent = descriptor.name;
    const blurb = document.createElement("p");
    blurb.textContent = descriptor.description;
    card.append(name, blurb);
    card.addEventListener("click", () => onOpen(descriptor));
    container.append(card);
  }
  return container;
}

function paramInput(param: ParamSpec): HTMLElement {
  if (param.type === "enum") {
    const select = document.createElement("select");
    select.name = param.name;
    for (const choice of param.choices ?? []) {
      const option = document.createElement("option");
      option.value = choice;
      option.textContent = choice;
      if (choice === param.default) option.selected = true;
      select.append(option);
    }
    return select;
  }
  const input = document.createElement("input");
  input.name = param.name;
  input.type = param.type === "string" ? "text" : "number";
  if (param.type === "float") input.step = "any";
  if (param.default !== null && param.default !== undefined) {
    input.value = String(param.default);
  }
  return input;
}

/** Parameter form generated from a plugin's schema. The fetch button stays
 * disabled while any required parameter is empty, so bad requests never
 * leave the client; server-side BadParams still land inline per field. */
export function renderParamForm(
  descriptor: PluginDescriptor,
  onFetch: (params: Record<string, string>) => void,
): RenderedParamForm {
  const form = document.createElement("form");
  form.className = "param-form";
  form.noValidate = true;
  form.dataset.pluginId = descriptor.id;

  const errorSlots = new Map<string, HTMLElement>();

  for (const param of descriptor.param_schema) {
    const row = document.createElement("div");
    row.className = "param-row";
    row.dataset.param = param.name;
    const label = document.createElement("label");
    label.textContent = param.required ? `${param.name} *` : param.name;
    const error = document.createElement("span");
    error.className = "param-error";
    error.hidden = true;
    errorSlots.set(param.name, error);
    row.append(label, paramInput(param), error);
    form.append(row);
  }

  const fetchButton = document.createElement("button");
  fetchButton.type = "submit";
  fetchButton.textContent = "Fetch";
  form.append(fetchButton);

  function collect(): Record<string, string> {
    const params: Record<string, string> = {};
    for (const param of descriptor.param_schema) {
      const field = form.querySelector<HTMLInputElement | HTMLSelectElement>(
        `[name="${param.name}"]`,
      );
      if (field && field.value !== "") params[param.name] = field.value;
    }
    return params;
  }

  function refreshGate(): void {
    const params = collect();
    fetchButton.disabled = !descriptor.param_schema.every(
      (p) => !p.required || p.name in params,
    );
  }
  refreshGate();

  form.addEventListener("input", refreshGate);
  form.addEventListener("change", refreshGate);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!fetchButton.disabled) onFetch(collect());
  });

  function showErrors(issues: { item: string; reason: string }[]): void {
    for (const slot of errorSlots.values()) {
      slot.hidden = true;
      slot.textContent = "";
    }
    for (const issue of issues) {
      const slot = errorSlots.get(issue.item);
      if (slot) {
        slot.textContent = issue.reason;
        slot.hidden = false;
      }
    }
  }

  return { element: form, collect, showErrors };
}
