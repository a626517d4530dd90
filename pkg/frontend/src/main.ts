import { App, AppElements } from "./app.js";

function requireElement<T extends HTMLElement>(selector: string): T {
  const el = document.querySelector<T>(selector);
  if (!el) throw new Error(`missing element: ${selector}`);
  return el;
}

export function mount(): App {
  const elements: AppElements = {
    form: requireElement<HTMLFormElement>("#search-form"),
    input: requireElement<HTMLInputElement>("#search-input"),
    banner: requireElement<HTMLElement>("#banner"),
    sidebar: requireElement<HTMLElement>("#tag-sidebar"),
    summaryTier: requireElement<HTMLElement>("#summary-tier"),
    entityTier: requireElement<HTMLElement>("#entity-tier"),
    datasetTier: requireElement<HTMLElement>("#dataset-tier"),
  };
  const app = new App(elements);
  app.start();
  return app;
}

document.addEventListener("DOMContentLoaded", () => {
  mount();
});
