// Shapes of the backend API responses the dashboard consumes.

export type AccountType = "User" | "Org";
export type FilterRole = "Sponsored" | "Sponsoring" | "Both";
export type PronounCategory = "Masculine" | "Feminine" | "OtherNeutral" | "Unspecified";
export type QualityFlag = "High" | "Medium" | "Low";
export type SortKey =
  | "sponsor_count"
  | "sponsoring_count"
  | "estimated_earnings"
  | "login"
  | "last_fetched_at";
export type SortDir = "asc" | "desc";
export type StatsGrouping = "type" | "country";

export interface UserRow {
  login: string;
  account_type: AccountType | null;
  display_name: string | null;
  location_raw: string | null;
  country: string | null;
  geocode_importance: number | null;
  pronoun_category: PronounCategory;
  sponsorable: boolean;
  sponsor_count: number;
  sponsoring_count: number;
  min_tier_usd: number | null;
  estimated_monthly_earnings_usd: number | null;
  commits_total: number;
  pull_requests_total: number;
  issues_total: number;
  reviews_total: number;
  created_at: string | null;
  first_seen_at: string;
  last_fetched_at: string | null;
  quality_flag: QualityFlag;
}

export interface UsersPage {
  items: UserRow[];
  total_matching: number;
  page: number;
  page_size: number;
  earnings_lower_bound: boolean;
  provenance: string;
}

export interface ParticipationRow {
  group_key: string;
  sponsored: number;
  sponsoring: number;
  both: number;
  total: number;
}

export interface StatsResponse {
  group_by: string;
  provenance: string;
  generated_at: string;
  rows: ParticipationRow[];
  sponsoring_to_sponsored_ratio?: number;
  ratio_display?: string;
}

export interface MetricBenchmark {
  value: number | null;
  percentile: number;
  bands: Record<string, number>;
  lower_bound?: boolean;
}

export interface BenchmarkResponse {
  group_by: string;
  provenance: string;
  generated_at: string;
  login: string;
  role: string;
  peer_count: number;
  peer_definition: string;
  earnings_lower_bound: boolean;
  metrics: {
    sponsor_count: MetricBenchmark;
    commits_total: MetricBenchmark;
    estimated_monthly_earnings_usd: MetricBenchmark;
  };
}

export interface ApiErrorBody {
  error: string;
  field: string;
  message: string;
}
