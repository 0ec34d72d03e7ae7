import { SessionRunner } from "./session";
import { ApiError, IncompleteDraftError } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function labelFor(dimension: string): string {
  return dimension.replace(/_/g, " ");
}

function scaleRow(
  name: string,
  lo: number,
  hi: number,
  checked: number | undefined,
  onPick: (value: number) => void,
): HTMLElement {
  const row = el("div", "scale-row");
  row.dataset.field = name;
  row.appendChild(el("span", "scale-label", labelFor(name)));
  for (let value = lo; value <= hi; value++) {
    const wrap = el("label", "scale-choice");
    const input = el("input");
    input.type = "radio";
    input.name = name;
    input.value = String(value);
    input.checked = checked === value;
    input.addEventListener("change", () => onPick(value));
    wrap.appendChild(input);
    wrap.appendChild(document.createTextNode(String(value)));
    row.appendChild(wrap);
  }
  return row;
}

function textSection(title: string, body: string): HTMLElement {
  const section = el("section", "case-section");
  section.appendChild(el("h3", undefined, title));
  section.appendChild(el("p", "case-text", body));
  return section;
}

/** Mounts the review console and re-renders on every runner change. */
export function mountApp(root: HTMLElement, runner: SessionRunner): void {
  let errorText = "";

  async function handleSubmit(): Promise<void> {
    errorText = "";
    try {
      await runner.submit();
    } catch (err) {
      if (err instanceof IncompleteDraftError) {
        errorText = `Rate every field before submitting: ${err.missing.join(", ")}`;
      } else if (err instanceof ApiError) {
        errorText = String(err.detail);
      } else {
        errorText = String(err);
      }
      render();
    }
  }

  function render(): void {
    root.textContent = "";
    const app = el("div", "review-app");

    if (runner.done) {
      const doneBox = el("div", "done-screen");
      const { position, total } = runner.progress;
      doneBox.appendChild(el("h2", undefined, "Session complete"));
      doneBox.appendChild(
        el("p", undefined, `${position} of ${total} cases assessed. Thank you.`),
      );
      app.appendChild(doneBox);
      root.appendChild(app);
      return;
    }

    const served = runner.current;
    if (!served) {
      app.appendChild(el("p", "empty", "No active session."));
      root.appendChild(app);
      return;
    }

    const header = el("header");
    header.appendChild(el("h2", undefined, "Impression review"));
    header.appendChild(
      el("span", "progress", `Case ${served.position} of ${served.total}`),
    );
    app.appendChild(header);

    app.appendChild(textSection("Indications", served.indications));
    app.appendChild(textSection("Findings", served.findings));
    app.appendChild(textSection("Impression under review", served.impression));

    const form = el("form", "assessment-form");
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void handleSubmit();
    });
    const schema = served.schema;
    const [lo, hi] = schema.dimension_scale;
    for (const dim of schema.dimensions) {
      form.appendChild(
        scaleRow(dim, lo, hi, runner.draft.scores[dim], (value) =>
          runner.setScore(dim, value),
        ),
      );
    }
    const [ulo, uhi] = schema.utility_scale;
    form.appendChild(
      scaleRow("utility", ulo, uhi, runner.draft.utility ?? undefined, (value) =>
        runner.setUtility(value),
      ),
    );

    const comment = el("textarea", "comment-box");
    comment.placeholder = "Optional comment";
    comment.value = runner.draft.comment;
    comment.addEventListener("input", () => runner.setComment(comment.value));
    form.appendChild(comment);

    const submit = el("button", "submit-btn", "Submit assessment");
    submit.type = "submit";
    form.appendChild(submit);

    if (errorText) form.appendChild(el("p", "error-line", errorText));
    app.appendChild(form);
    root.appendChild(app);
  }

  runner.onChange = render;
  render();
}
