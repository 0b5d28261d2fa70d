import { renderTimeseries } from "./chart";
import type { DataStream, HistogramPayload, TablePayload } from "./types";

function renderTable(payload: TablePayload): HTMLElement {
  const table = document.createElement("table");
  table.className = "sheet";
  const head = table.createTHead().insertRow();
  for (const column of payload.columns) {
    const th = document.createElement("th");
    th.textContent = column;
    head.append(th);
  }
  const body = table.createTBody();
  for (const row of payload.rows) {
    const tr = body.insertRow();
    for (const value of row) {
      tr.insertCell().textContent = String(value);
    }
  }
  return table;
}

function renderHistogram(payload: HistogramPayload): HTMLElement {
  const container = document.createElement("div");
  container.className = "histogram";
  const max = Math.max(1, ...payload.counts);
  for (let i = 0; i < payload.counts.length; i++) {
    const bar = document.createElement("div");
    bar.className = "bar";
    bar.style.height = `${(payload.counts[i] / max) * 120}px`;
    bar.title = `[${payload.edges[i]}, ${payload.edges[i + 1]}${i === payload.counts.length - 1 ? "]" : ")"}: ${payload.counts[i]}`;
    container.append(bar);
  }
  if (payload.dropped > 0) {
    const note = document.createElement("p");
    note.className = "dropped";
    note.textContent = `${payload.dropped} values outside range`;
    container.append(note);
  }
  return container;
}

export function renderStream(stream: DataStream): HTMLElement {
  switch (stream.kind) {
    case "series":
    case "multiseries":
      return renderTimeseries(stream);
    case "table":
      return renderTable(stream.payload as TablePayload);
    case "histogram":
      return renderHistogram(stream.payload as HistogramPayload);
  }
}
