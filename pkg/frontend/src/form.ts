import type { FormItem, FormSpec } from "./types";

export interface RenderedForm {
  element: HTMLFormElement;
  /** Current answers: likert ints, non-empty text; unanswered items absent. */
  collect(): Record<string, number | string>;
  /** Paint per-item server validation messages inline. */
  showErrors(issues: { item: string; reason: string }[]): void;
}

const REASON_TEXT: Record<string, string> = {
  out_of_range: "answer is outside the allowed range",
  missing_required: "an answer is required",
  type_mismatch: "answer has the wrong type",
  unknown_item: "unknown item",
};

function likertControl(item: FormItem): HTMLElement {
  const group = document.createElement("div");
  group.className = "likert-group";
  const lo = item.min ?? 1;
  const hi = item.max ?? 5;
  for (let v = lo; v <= hi; v++) {
    const label = document.createElement("label");
    label.className = "likert-choice";
    const input = document.createElement("input");
    input.type = "radio";
    input.name = item.id;
    input.value = String(v);
    const caption = item.labels?.[v - lo] ?? String(v);
    label.append(input, ` ${caption}`);
    group.append(label);
  }
  return group;
}

function textControl(item: FormItem): HTMLElement {
  const input = document.createElement("textarea");
  input.name = item.id;
  input.rows = 2;
  return input;
}

/** One control per item, in source order. Submit stays disabled until every
 * required item has an answer; submission hands back the answers object. */
export function renderForm(
  spec: FormSpec,
  onSubmit: (answers: Record<string, number | string>) => void,
): RenderedForm {
  const form = document.createElement("form");
  form.className = "questionnaire-form";
  form.noValidate = true;

  const heading = document.createElement("h2");
  heading.textContent = `${spec.questionnaire_id} (v${spec.version})`;
  form.append(heading);

  const errorSlots = new Map<string, HTMLElement>();

  for (const item of spec.items) {
    const row = document.createElement("div");
    row.className = "form-item";
    row.dataset.itemId = item.id;
    const prompt = document.createElement("label");
    prompt.className = "prompt";
    prompt.textContent = item.prompt + (item.required ? " *" : "");
    const error = document.createElement("span");
    error.className = "item-error";
    error.hidden = true;
    errorSlots.set(item.id, error);
    row.append(prompt, item.kind === "likert" ? likertControl(item) : textControl(item), error);
    form.append(row);
  }

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Submit";
  submit.disabled = true;
  form.append(submit);

  function collect(): Record<string, number | string> {
    const answers: Record<string, number | string> = {};
    for (const item of spec.items) {
      if (item.kind === "likert") {
        const checked = form.querySelector<HTMLInputElement>(
          `input[name="${item.id}"]:checked`,
        );
        if (checked) answers[item.id] = parseInt(checked.value, 10);
      } else {
        const field = form.querySelector<HTMLTextAreaElement>(`textarea[name="${item.id}"]`);
        if (field && field.value.trim() !== "") answers[item.id] = field.value;
      }
    }
    return answers;
  }

  function refreshGate(): void {
    const answers = collect();
    submit.disabled = !spec.items.every((it) => !it.required || it.id in answers);
  }

  form.addEventListener("change", refreshGate);
  form.addEventListener("input", refreshGate);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!submit.disabled) onSubmit(collect());
  });

  function showErrors(issues: { item: string; reason: string }[]): void {
    for (const slot of errorSlots.values()) {
      slot.hidden = true;
      slot.textContent = "";
    }
    for (const issue of issues) {
      const slot = errorSlots.get(issue.item);
      if (slot) {
        slot.textContent = REASON_TEXT[issue.reason] ?? issue.reason;
        slot.hidden = false;
      }
    }
  }

  return { element: form, collect, showErrors };
}
