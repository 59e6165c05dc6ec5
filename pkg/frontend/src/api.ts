/** Thin fetch client for the scoring service. Every number the UI shows
 * comes from these responses; nothing is re-derived client side. */

import type {
  CorpusMeta,
  CorrResponse,
  DiscrepancyResponse,
  JobRecord,
  ScoreRow,
  TrainingRow,
  TrainingSetMeta,
} from './types.js';

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { 'content-type': 'application/json' },
    ...init,
  });
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const code = body?.code ?? 'http_error';
    const message = body?.message ?? `request failed with status ${response.status}`;
    throw new ApiRequestError(response.status, code, message);
  }
  return body as T;
}

export class ServiceClient {
  constructor(private base: string = '') {}

  listCorpora(): Promise<CorpusMeta[]> {
    return request<{ corpora: CorpusMeta[] }>(this.base, '/corpora').then((b) => b.corpora);
  }

  uploadCorpus(name: string, matrix: string): Promise<CorpusMeta> {
    return request(this.base, '/corpora', {
      method: 'POST',
      body: JSON.stringify({ name, matrix }),
    });
  }

  listTrainingSets(): Promise<TrainingSetMeta[]> {
    return request<{ training_sets: TrainingSetMeta[] }>(this.base, '/training-sets').then(
      (b) => b.training_sets,
    );
  }

  uploadTrainingSet(name: string, csv: string): Promise<TrainingSetMeta> {
    return request(this.base, '/training-sets', {
      method: 'POST',
      body: JSON.stringify({ name, csv }),
    });
  }

  async trainingSetRows(id: string): Promise<TrainingRow[]> {
    const body = await request<{ csv: string }>(this.base, `/training-sets/${id}`);
    return parseTrainingCsv(body.csv);
  }

  cloneTrainingSet(
    id: string,
    edits: { set: TrainingRow[]; remove: { entity: string; year: number }[] },
    name?: string,
  ): Promise<TrainingSetMeta> {
    return request(this.base, `/training-sets/${id}/clone`, {
      method: 'POST',
      body: JSON.stringify({ ...edits, name }),
    });
  }

  submitJob(
    corpusId: string,
    trainingSetId: string,
    spec: Record<string, unknown>,
    trainYears?: number[],
  ): Promise<JobRecord> {
    return request(this.base, '/jobs', {
      method: 'POST',
      body: JSON.stringify({
        corpus_id: corpusId,
        training_set_id: trainingSetId,
        spec,
        train_years: trainYears ?? null,
      }),
    });
  }

  listJobs(): Promise<JobRecord[]> {
    return request<{ jobs: JobRecord[] }>(this.base, '/jobs').then((b) => b.jobs);
  }

  getJob(id: string): Promise<JobRecord> {
    return request(this.base, `/jobs/${id}`);
  }

  jobScores(id: string): Promise<ScoreRow[]> {
    return request<{ rows: ScoreRow[] }>(this.base, `/jobs/${id}/scores`).then((b) => b.rows);
  }

  corr(jobA: string, jobB: string): Promise<CorrResponse> {
    return request(this.base, `/eval/corr?job_a=${jobA}&job_b=${jobB}`);
  }

  discrepancies(jobA: string, jobB: string, top = 10): Promise<DiscrepancyResponse> {
    return request(this.base, `/eval/discrepancies?job_a=${jobA}&job_b=${jobB}&top=${top}`);
  }
}

/** Parse the service's training CSV (entity,year,score with header). */
export function parseTrainingCsv(csv: string): TrainingRow[] {
  const lines = csv.split('\n').filter((line) => line.trim().length > 0);
  const header = lines[0]?.split(',') ?? [];
  const entityIdx = header.indexOf('entity');
  const yearIdx = header.indexOf('year');
  const scoreIdx = header.indexOf('score');
  if (entityIdx < 0 || yearIdx < 0 || scoreIdx < 0) {
    throw new Error('training CSV must have entity,year,score columns');
  }
  return lines.slice(1).map((line) => {
    const parts = line.split(',');
    return {
      entity: parts[entityIdx],
      year: Number(parts[yearIdx]),
      score: Number(parts[scoreIdx]),
    };
  });
}
