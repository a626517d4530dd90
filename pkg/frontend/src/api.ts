// Typed client for the catalog service. Every view is rendered from
// these payloads verbatim; nothing here re-scores or re-ranks.

export interface DatasetDoc {
  id: string;
  name: string;
  desc: string;
  url: string;
  source: string;
  data_type: string;
  scale: string;
  tags: string[];
  tags_weak: string[];
  alive: string;
}

export interface SearchHit extends DatasetDoc {
  score: number;
}

export interface SearchResponse {
  query: string;
  hits: SearchHit[];
}

export interface EntityCard {
  name: string;
  kind: string;
  description: string;
  domain: string;
  activity_focus: string;
}

export interface RelatedResponse {
  dataset_id: string;
  related: DatasetDoc[];
  entities: EntityCard[];
  summary: string;
}

export interface SummaryBundle {
  query: string;
  initial: SearchHit[];
  related: DatasetDoc[];
  entities: EntityCard[];
  summary: string;
  exploration_gain: number;
}

export interface ApiError {
  code: string;
  message: string;
}

export class ServiceError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message || code);
    this.status = status;
    this.code = code;
  }
}

function apiBase(): string {
  return (window as { __SEDA_API__?: string }).__SEDA_API__ ?? "";
}

async function getJson<T>(path: string): Promise<T> {
  let response: Response;
  try {
    response = await fetch(`${apiBase()}${path}`);
  } catch {
    throw new ServiceError(0, "network", "The catalog service is unreachable.");
  }
  const body = (await response.json().catch(() => null)) as unknown;
  if (!response.ok) {
    const err = (body ?? {}) as Partial<ApiError>;
    throw new ServiceError(
      response.status,
      err.code ?? "http_error",
      err.message ?? `Request failed with status ${response.status}`,
    );
  }
  return body as T;
}

export function searchDatasets(
  q: string,
  k: number,
  tag: string | null,
): Promise<SearchResponse> {
  const params = new URLSearchParams({ q, k: String(k) });
  if (tag) params.set("tag", tag);
  return getJson<SearchResponse>(`/api/search?${params}`);
}

export function fetchSummary(q: string, k: number): Promise<SummaryBundle> {
  const params = new URLSearchParams({ q, k: String(k) });
  return getJson<SummaryBundle>(`/api/summary?${params}`);
}

export function fetchRelated(datasetId: string): Promise<RelatedResponse> {
  return getJson<RelatedResponse>(
    `/api/datasets/${encodeURIComponent(datasetId)}/related`,
  );
}

export function fetchEntity(sourceName: string): Promise<EntityCard> {
  return getJson<EntityCard>(
    `/api/entities/${encodeURIComponent(sourceName)}`,
  );
}
