// View controller: runs the query -> inspect -> refine -> pivot loop.
// Each navigation pushes a history entry whose URL fully encodes the
// view, so back/forward and deep links replay through the same loaders.

import {
  DatasetDoc,
  EntityCard,
  ServiceError,
  SummaryBundle,
  fetchEntity,
  fetchRelated,
  fetchSummary,
  searchDatasets,
} from "./api.js";
import {
  clearBanner,
  liveOnly,
  renderDatasetTier,
  renderEntityTier,
  renderSidebar,
  renderSummaryTier,
  showBanner,
} from "./render.js";
import {
  DEFAULT_K,
  ViewState,
  decodeState,
  emptyState,
  encodeState,
} from "./state.js";

export interface AppElements {
  form: HTMLFormElement;
  input: HTMLInputElement;
  banner: HTMLElement;
  sidebar: HTMLElement;
  summaryTier: HTMLElement;
  entityTier: HTMLElement;
  datasetTier: HTMLElement;
}

const IDLE_MESSAGE = "Search the catalog to start exploring.";
const EMPTY_MESSAGE =
  "No datasets matched. Try a broader phrase or remove the tag filter.";

export class App {
  private readonly el: AppElements;
  private state: ViewState = emptyState();
  /* bundle for the active query; entity pivots list from it */
  private bundle: SummaryBundle | null = null;
  // at most one view load may land; later requests invalidate earlier ones
  private seq = 0;
  private lastLoad: (() => void) | null = null;

  constructor(elements: AppElements) {
    this.el = elements;
  }

  start(): void {
    this.el.form.addEventListener("submit", (event) => {
      event.preventDefault();
      this.submitQuery(this.el.input.value.trim());
    });
    window.addEventListener("popstate", () => {
      this.applyState(decodeState(window.location.search), false);
    });
    this.applyState(decodeState(window.location.search), false);
  }

  currentState(): ViewState {
    return { ...this.state };
  }

  submitQuery(q: string): void {
    this.applyState({ ...emptyState(), q }, true);
  }

  refine(tag: string): void {
    this.applyState({ ...this.state, view: "query", id: null, entity: null, tag }, true);
  }

  clearFilter(): void {
    this.applyState({ ...this.state, view: "query", id: null, entity: null, tag: null }, true);
  }

  pivotToDataset(doc: DatasetDoc): void {
    this.applyState({ ...this.state, view: "dataset", id: doc.id, entity: null }, true);
  }

  pivotToEntity(card: EntityCard): void {
    this.applyState({ ...this.state, view: "entity", entity: card.name, id: null }, true);
  }

  applyState(state: ViewState, push: boolean): void {
    this.state = state;
    if (push) {
      window.history.pushState({}, "", `${window.location.pathname}${encodeState(state)}`);
    }
    this.el.input.value = state.q;
    if (state.view === "dataset" && state.id) {
      void this.loadDatasetView(state.id);
    } else if (state.view === "entity" && state.entity) {
      void this.loadEntityView(state.entity);
    } else {
      void this.loadQueryView();
    }
  }

  private nextSeq(): number {
    this.seq += 1;
    return this.seq;
  }

  private fail(error: unknown, retry: () => void): void {
    this.lastLoad = retry;
    const message =
      error instanceof ServiceError
        ? error.message
        : "Something went wrong while loading the view.";
    showBanner(this.el.banner, message, () => this.lastLoad?.());
  }

  private renderIdle(): void {
    clearBanner(this.el.banner);
    renderSummaryTier(this.el.summaryTier, IDLE_MESSAGE, null);
    renderEntityTier(this.el.entityTier, [], () => undefined);
    this.el.datasetTier.innerHTML = "";
    renderSidebar(this.el.sidebar, [], this.sidebarOptions());
  }

  private sidebarOptions() {
    return {
      activeTag: this.state.tag,
      onRefine: (tag: string) => this.refine(tag),
      onClearFilter: () => this.clearFilter(),
    };
  }

  private datasetOptions(emptyMessage: string = EMPTY_MESSAGE) {
    return {
      emptyMessage,
      onPivot: (doc: DatasetDoc) => this.pivotToDataset(doc),
    };
  }

  private async loadQueryView(): Promise<void> {
    const { q, tag } = this.state;
    if (!q) {
      this.renderIdle();
      return;
    }
    const seq = this.nextSeq();
    const retry = () => void this.loadQueryView();
    try {
      // the summary bundle is per-query; the tag only narrows the hits
      const [search, bundle] = await Promise.all([
        searchDatasets(q, DEFAULT_K, tag),
        fetchSummary(q, DEFAULT_K),
      ]);
      if (seq !== this.seq) return;
      this.bundle = bundle;
      clearBanner(this.el.banner);
      renderSummaryTier(this.el.summaryTier, bundle.summary, bundle.exploration_gain);
      renderEntityTier(this.el.entityTier, bundle.entities, (card) =>
        this.pivotToEntity(card),
      );
      renderDatasetTier(this.el.datasetTier, search.hits, this.datasetOptions());
      renderSidebar(this.el.sidebar, search.hits, this.sidebarOptions());
    } catch (error) {
      if (seq !== this.seq) return;
      if (error instanceof ServiceError && error.code === "unknown_tag") {
        // a bad tag is part of the view, not an outage: keep the chip
        // so it can be removed, and say so inline
        clearBanner(this.el.banner);
        renderSummaryTier(this.el.summaryTier, `No tag named "${tag}".`, null);
        renderEntityTier(this.el.entityTier, [], () => undefined);
        renderDatasetTier(this.el.datasetTier, [], this.datasetOptions(
          `No tag named "${tag}". Remove the filter to continue.`,
        ));
        renderSidebar(this.el.sidebar, [], this.sidebarOptions());
        return;
      }
      this.fail(error, retry);
    }
  }

  private async loadDatasetView(datasetId: string): Promise<void> {
    const seq = this.nextSeq();
    const retry = () => void this.loadDatasetView(datasetId);
    try {
      const related = await fetchRelated(datasetId);
      if (seq !== this.seq) return;
      clearBanner(this.el.banner);
      renderSummaryTier(this.el.summaryTier, related.summary, null);
      renderEntityTier(this.el.entityTier, related.entities, (card) =>
        this.pivotToEntity(card),
      );
      renderDatasetTier(this.el.datasetTier, related.related, this.datasetOptions(
        "No related datasets found.",
      ));
      renderSidebar(this.el.sidebar, related.related, this.sidebarOptions());
    } catch (error) {
      if (seq !== this.seq) return;
      if (error instanceof ServiceError && error.status === 404) {
        this.renderNotFound(`No dataset with id ${datasetId}.`);
        return;
      }
      this.fail(error, retry);
    }
  }

  private async loadEntityView(sourceName: string): Promise<void> {
    const seq = this.nextSeq();
    const retry = () => void this.loadEntityView(sourceName);
    try {
      const card = await fetchEntity(sourceName);
      // listing a source's datasets selects, verbatim, the bundle items
      // whose source field names the entity; the bundle is refetched on
      // deep links where no query view ran first
      let bundle = this.bundle;
      if ((!bundle || bundle.query !== this.state.q) && this.state.q) {
        bundle = await fetchSummary(this.state.q, DEFAULT_K);
      }
      if (seq !== this.seq) return;
      this.bundle = bundle;
      const datasets = bundle ? sourceDatasets(bundle, sourceName) : [];
      clearBanner(this.el.banner);
      renderSummaryTier(this.el.summaryTier, card.description, null);
      renderEntityTier(this.el.entityTier, [card], () => undefined);
      renderDatasetTier(this.el.datasetTier, datasets, this.datasetOptions(
        `No datasets from ${sourceName} in this exploration.`,
      ));
      renderSidebar(this.el.sidebar, datasets, this.sidebarOptions());
    } catch (error) {
      if (seq !== this.seq) return;
      if (error instanceof ServiceError && error.status === 404) {
        this.renderNotFound(`No entity named ${sourceName}.`);
        return;
      }
      this.fail(error, retry);
    }
  }

  private renderNotFound(message: string): void {
    clearBanner(this.el.banner);
    renderSummaryTier(this.el.summaryTier, message, null);
    renderEntityTier(this.el.entityTier, [], () => undefined);
    renderDatasetTier(this.el.datasetTier, [], this.datasetOptions(message));
    renderSidebar(this.el.sidebar, [], this.sidebarOptions());
  }
}

// Bundle items keep their response order: initial hits first, then the
// navigation additions, without duplicates.
export function sourceDatasets(
  bundle: SummaryBundle,
  sourceName: string,
): DatasetDoc[] {
  const seen = new Set<string>();
  const out: DatasetDoc[] = [];
  for (const item of liveOnly<DatasetDoc>([...bundle.initial, ...bundle.related])) {
    if (item.source === sourceName && !seen.has(item.id)) {
      seen.add(item.id);
      out.push(item);
    }
  }
  return out;
}
