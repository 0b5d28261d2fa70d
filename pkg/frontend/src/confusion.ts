import type { ConfusionMetrics } from "./types";

function formatPercent(fraction: number): string {
  const pct = fraction * 100;
  const rounded = Math.round(pct * 10) / 10;
  return `${Number.isInteger(rounded) ? rounded.toFixed(0) : rounded}%`;
}

/** k x k heatmap grid: one .cell per matrix entry with its count, diagonal
 * cells marked, shaded by row share, and the overall accuracy on top. */
export function renderConfusion(matrix: number[][], metrics: ConfusionMetrics): HTMLElement {
  const k = matrix.length;
  const container = document.createElement("div");
  container.className = "confusion";

  const accuracy = document.createElement("p");
  accuracy.className = "accuracy";
  accuracy.textContent = `accuracy ${formatPercent(metrics.accuracy)}`;
  container.append(accuracy);

  const grid = document.createElement("div");
  grid.className = "confusion-grid";
  grid.style.display = "grid";
  grid.style.gridTemplateColumns = `repeat(${k + 1}, auto)`;

  const corner = document.createElement("span");
  corner.className = "grid-label corner";
  corner.textContent = "true \\ pred";
  grid.append(corner);
  for (let j = 0; j < k; j++) {
    const head = document.createElement("span");
    head.className = "grid-label col-label";
    head.textContent = String(j);
    grid.append(head);
  }

  for (let i = 0; i < k; i++) {
    const rowLabel = document.createElement("span");
    rowLabel.className = "grid-label row-label";
    rowLabel.textContent = String(i);
    grid.append(rowLabel);
    const rowTotal = matrix[i].reduce((a, b) => a + b, 0);
    for (let j = 0; j < k; j++) {
      const cell = document.createElement("span");
      cell.className = i === j ? "cell diag" : "cell";
      cell.dataset.row = String(i);
      cell.dataset.col = String(j);
      cell.textContent = String(matrix[i][j]);
      const share = rowTotal > 0 ? matrix[i][j] / rowTotal : 0;
      cell.style.backgroundColor = `rgba(38, 99, 235, ${(0.08 + 0.8 * share).toFixed(3)})`;
      grid.append(cell);
    }
  }
  container.append(grid);

  const perClass = document.createElement("p");
  perClass.className = "per-class";
  perClass.textContent = metrics.precision
    .map((p, j) => {
      const r = metrics.recall[j];
      const fp = p === null ? "n/a" : formatPercent(p);
      const fr = r === null ? "n/a" : formatPercent(r);
      return `class ${j}: precision ${fp}, recall ${fr}`;
    })
    .join(" · ");
  container.append(perClass);

  return container;
}
