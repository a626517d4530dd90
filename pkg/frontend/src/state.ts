// View state and its URL encoding. The whole exploration lives in the
// query string so any view can be shared, bookmarked, or revisited
// through browser history.

export type ViewKind = "query" | "dataset" | "entity";

export interface ViewState {
  view: ViewKind;
  q: string;
  tag: string | null;
  /* dataset pivot anchor */
  id: string | null;
  /* entity pivot source name */
  entity: string | null;
}

export const DEFAULT_K = 10;

export function emptyState(): ViewState {
  return { view: "query", q: "", tag: null, id: null, entity: null };
}

export function encodeState(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.q) params.set("q", state.q);
  if (state.tag) params.set("tag", state.tag);
  if (state.view === "dataset" && state.id) {
    params.set("view", "dataset");
    params.set("id", state.id);
  } else if (state.view === "entity" && state.entity) {
    params.set("view", "entity");
    params.set("entity", state.entity);
  }
  const encoded = params.toString();
  return encoded ? `?${encoded}` : "";
}

export function decodeState(search: string): ViewState {
  const params = new URLSearchParams(search);
  const state = emptyState();
  state.q = params.get("q") ?? "";
  state.tag = params.get("tag");
  const view = params.get("view");
  if (view === "dataset" && params.get("id")) {
    state.view = "dataset";
    state.id = params.get("id");
  } else if (view === "entity" && params.get("entity")) {
    state.view = "entity";
    state.entity = params.get("entity");
  }
  return state;
}
