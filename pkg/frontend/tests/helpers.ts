import { App, AppElements } from "../src/app.js";

export function buildDom(): AppElements {
  document.body.innerHTML = `
    <form id="search-form">
      <input id="search-input" type="search">
      <button id="search-button" type="submit">Search</button>
    </form>
    <div id="banner" hidden></div>
    <aside id="tag-sidebar"></aside>
    <section id="summary-tier"></section>
    <section id="entity-tier"></section>
    <section id="dataset-tier"></section>
  `;
  const pick = <T extends HTMLElement>(sel: string): T => {
    const el = document.querySelector<T>(sel);
    if (!el) throw new Error(`missing ${sel}`);
    return el;
  };
  return {
    form: pick<HTMLFormElement>("#search-form"),
    input: pick<HTMLInputElement>("#search-input"),
    banner: pick<HTMLElement>("#banner"),
    sidebar: pick<HTMLElement>("#tag-sidebar"),
    summaryTier: pick<HTMLElement>("#summary-tier"),
    entityTier: pick<HTMLElement>("#entity-tier"),
    datasetTier: pick<HTMLElement>("#dataset-tier"),
  };
}

export function mountApp(): { app: App; el: AppElements } {
  const el = buildDom();
  const app = new App(el);
  app.start();
  return { app, el };
}

export async function waitFor(
  cond: () => boolean,
  timeoutMs = 15000,
): Promise<void> {
  const start = Date.now();
  while (!cond()) {
    if (Date.now() - start > timeoutMs) {
      throw new Error("timed out waiting for condition");
    }
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

export function renderedDatasetIds(datasetTier: HTMLElement): string[] {
  return [...datasetTier.querySelectorAll<HTMLElement>(".dataset-card")].map(
    (card) => card.dataset.id ?? "",
  );
}

export function renderedDatasetNames(datasetTier: HTMLElement): string[] {
  return [...datasetTier.querySelectorAll<HTMLElement>(".dataset-name")].map(
    (el) => el.textContent ?? "",
  );
}
