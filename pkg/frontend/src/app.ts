import { ApiClient, ApiError } from "./api";
import { renderConfusion } from "./confusion";
import { renderForm } from "./form";
import { renderParamForm, renderPortfolio } from "./portfolio";
import { renderStream } from "./render";
import { renderTimeseries } from "./chart";
import type { LoginData, PluginDescriptor } from "./types";

export type View = "series" | "portfolio" | "questionnaire" | "ml";

export interface ViewState {
  session: LoginData | null;
  subject: string;
  channel: string;
  t0: number;
  t1: number;
  view: View;
}

const POLL_MS = 5000;
const DAY_MS = 86_400_000;

/** Single-page dashboard shell. State drives rendering; the series view
 * repolls on an interval and any 401 drops straight back to login. */
export class App {
  state: ViewState;
  api: ApiClient;
  private root: HTMLElement;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(root: HTMLElement, apiBase = "") {
    this.root = root;
    this.state = {
      session: null,
      subject: "",
      channel: "knee_flex",
      t0: Date.now() - 7 * DAY_MS,
      t1: Date.now(),
      view: "series",
    };
    this.api = new ApiClient(apiBase, () => this.onUnauthorized());
  }

  private onUnauthorized(): void {
    this.state = { ...this.state, session: null };
    this.stopPolling();
    this.render();
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  setView(view: View): void {
    this.state = { ...this.state, view };
    this.stopPolling();
    this.render();
  }

  render(): void {
    this.root.replaceChildren();
    if (!this.state.session) {
      this.root.append(this.loginView());
      return;
    }
    this.root.append(this.navBar());
    const main = document.createElement("main");
    main.className = "view";
    this.root.append(main);
    switch (this.state.view) {
      case "series":
        this.seriesView(main);
        break;
      case "portfolio":
        this.portfolioView(main);
        break;
      case "questionnaire":
        this.questionnaireView(main);
        break;
      case "ml":
        this.mlView(main);
        break;
    }
  }

  private navBar(): HTMLElement {
    const nav = document.createElement("nav");
    for (const view of ["series", "portfolio", "questionnaire", "ml"] as View[]) {
      const button = document.createElement("button");
      button.textContent = view;
      button.className = this.state.view === view ? "active" : "";
      button.addEventListener("click", () => this.setView(view));
      nav.append(button);
    }
    const who = document.createElement("span");
    who.className = "whoami";
    who.textContent = `${this.state.session!.username} (${this.state.session!.role})`;
    const logout = document.createElement("button");
    logout.textContent = "log out";
    logout.addEventListener("click", async () => {
      await this.api.logout().catch(() => {});
      this.onUnauthorized();
    });
    nav.append(who, logout);
    return nav;
  }

  private loginView(): HTMLElement {
    const form = document.createElement("form");
    form.className = "login";
    const user = document.createElement("input");
    user.name = "username";
    user.placeholder = "username";
    const pass = document.createElement("input");
    pass.name = "password";
    pass.type = "password";
    pass.placeholder = "password";
    const button = document.createElement("button");
    button.type = "submit";
    button.textContent = "Sign in";
    const error = document.createElement("p");
    error.className = "login-error";
    error.hidden = true;
    form.append(user, pass, button, error);
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      try {
        const session = await this.api.login(user.value, pass.value);
        this.state = {
          ...this.state,
          session,
          subject: session.linked_subject ?? this.state.subject,
        };
        this.render();
      } catch (exc) {
        error.textContent = exc instanceof ApiError ? exc.message : String(exc);
        error.hidden = false;
      }
    });
    return form;
  }

  private windowControls(onChange: () => void): HTMLElement {
    const bar = document.createElement("div");
    bar.className = "window-controls";
    const subject = document.createElement("input");
    subject.placeholder = "subject";
    subject.value = this.state.subject;
    const channel = document.createElement("input");
    channel.placeholder = "channel";
    channel.value = this.state.channel;
    const apply = document.createElement("button");
    apply.textContent = "Apply";
    apply.addEventListener("click", () => {
      this.state = { ...this.state, subject: subject.value, channel: channel.value };
      onChange();
    });
    bar.append(subject, channel, apply);
    return bar;
  }

  private seriesView(main: HTMLElement): void {
    const chartSlot = document.createElement("div");
    const status = document.createElement("p");
    status.className = "status";
    main.append(this.windowControls(() => load()), chartSlot, status);

    const load = async () => {
      if (!this.state.subject) {
        status.textContent = "pick a subject";
        return;
      }
      try {
        const stream = await this.api.latest("series", () =>
          this.api.vizData("timeseries_line", {
            subject: this.state.subject,
            channel: this.state.channel,
            t0: this.state.t0,
            t1: this.state.t1,
            max_points: 500,
          }),
        );
        if (stream === null) return; // superseded by a newer selection
        chartSlot.replaceChildren(renderTimeseries(stream));
        status.textContent = `as of ${new Date().toLocaleTimeString()}`;
      } catch (exc) {
        if (exc instanceof ApiError) status.textContent = exc.message;
      }
    };
    void load();
    this.pollTimer = setInterval(load, POLL_MS);
  }

  private portfolioView(main: HTMLElement): void {
    const slot = document.createElement("div");
    main.append(slot);
    void this.api.portfolio().then((descriptors) => {
      const open = (descriptor: PluginDescriptor) => {
        const paramForm = renderParamForm(descriptor, async (params) => {
          try {
            const stream = await this.api.vizData(descriptor.id, params);
            output.replaceChildren(renderStream(stream));
          } catch (exc) {
            if (exc instanceof ApiError && exc.issues) paramForm.showErrors(exc.issues);
            else if (exc instanceof ApiError) output.textContent = exc.message;
          }
        });
        const output = document.createElement("div");
        slot.replaceChildren(renderPortfolio(descriptors, open), paramForm.element, output);
      };
      slot.replaceChildren(renderPortfolio(descriptors, open));
    });
  }

  private questionnaireView(main: HTMLElement): void {
    const list = document.createElement("div");
    const slot = document.createElement("div");
    main.append(list, slot);
    void this.api.questionnaires().then((entries) => {
      for (const entry of entries) {
        const open = document.createElement("button");
        open.textContent = `${entry.id} (v${entry.version}, ${entry.n_items} items)`;
        open.addEventListener("click", async () => {
          const spec = await this.api.form(entry.id);
          const rendered = renderForm(spec, async (answers) => {
            try {
              const result = await this.api.submitResponse(
                entry.id,
                this.state.subject || this.state.session?.linked_subject || "",
                answers,
              );
              const note = document.createElement("p");
              note.className = "score-note";
              note.textContent = result.score
                ? `submitted; score ${result.score.total.toFixed(3)} over ${result.score.n_scored} items`
                : "submitted";
              slot.append(note);
            } catch (exc) {
              if (exc instanceof ApiError && exc.issues) rendered.showErrors(exc.issues);
            }
          });
          slot.replaceChildren(rendered.element);
        });
        list.append(open);
      }
    });
  }

  private mlView(main: HTMLElement): void {
    const csv = document.createElement("textarea");
    csv.placeholder = "CSV: features..., integer label (header row first)";
    csv.rows = 6;
    const layers = document.createElement("input");
    layers.value = "2,8,2";
    const epochs = document.createElement("input");
    epochs.type = "number";
    epochs.value = "200";
    const start = document.createElement("button");
    start.textContent = "Upload and train";
    const status = document.createElement("p");
    status.className = "status";
    const output = document.createElement("div");
    main.append(csv, layers, epochs, start, status, output);

    start.addEventListener("click", async () => {
      try {
        const dataset = await this.api.uploadDataset(csv.value);
        status.textContent = `dataset ${dataset.dataset_id}: ${dataset.rows} rows`;
        const { job_id } = await this.api.train({
          dataset_id: dataset.dataset_id,
          layers: layers.value.split(",").map((v) => parseInt(v.trim(), 10)),
          epochs: parseInt(epochs.value, 10),
          learning_rate: 0.1,
          seed: 7,
        });
        const poll = setInterval(async () => {
          const job = await this.api.job(job_id);
          status.textContent = `job ${job.id}: ${job.state}`;
          if (job.state === "done") {
            clearInterval(poll);
            const confusion = await this.api.confusion(job_id);
            output.replaceChildren(renderConfusion(confusion.matrix, confusion.metrics));
          } else if (job.state === "failed") {
            clearInterval(poll);
            status.textContent = `job failed: ${job.error}`;
          }
        }, 500);
      } catch (exc) {
        if (exc instanceof ApiError) status.textContent = exc.message;
      }
    });
  }
}
