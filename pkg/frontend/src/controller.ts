/**
 * Session controller: wires the pick state, the HTTP client, and the DOM.
 *
 * Separated from the three.js viewer so the whole workflow (pick, estimate,
 * residual table, preview gating, export) can run under a DOM test with a
 * mocked renderer. Every displayed number traces to a server response; the
 * pair list shown always equals GET /api/pairs after each mutation.
 */

import {
  ApiError,
  SessionApi,
  type EstimateMode,
  type EstimateResult,
} from "./api";
import {
  MIN_PAIRS_FOR_ESTIMATE,
  PickState,
  residualColor,
  worstPair,
  type Vec3,
} from "./pickstate";

export interface RendererHooks {
  refreshMarkers(): void;
  showPreview(on: boolean): Promise<void> | void;
}

export interface ControllerElements {
  pairTable: HTMLTableSectionElement;
  estimateButton: HTMLButtonElement;
  previewToggle: HTMLInputElement;
  exportButton: HTMLButtonElement;
  exportPath: HTMLInputElement;
  modeSelect: HTMLSelectElement;
  rmseLabel: HTMLElement;
  banner: HTMLElement;
  hint: HTMLElement;
  status: HTMLElement;
}

export class SessionController {
  readonly picks = new PickState();
  lastEstimate: EstimateResult | null = null;

  constructor(
    readonly api: SessionApi,
    readonly el: ControllerElements,
    readonly renderer: RendererHooks,
  ) {
    el.estimateButton.addEventListener("click", () => void this.estimate());
    el.exportButton.addEventListener("click", () => void this.exportTransform());
    el.previewToggle.addEventListener("change", () =>
      void this.togglePreview(el.previewToggle.checked),
    );
    this.renderControls();
  }

  /** Feed a snapped click through the pick state machine. */
  async handlePick(
    cloud: "source" | "target",
    point: Vec3,
    index: number,
  ): Promise<void> {
    const intent = this.picks.click(cloud, point, index);
    if (intent.type === "hint") {
      this.showHint(intent.message);
    } else if (intent.type === "pending-set") {
      this.showHint("now pick the matching target point");
    } else {
      await this.guard(async () => {
        await this.api.addPair(intent.source, intent.target);
        await this.refreshPairs();
        this.showHint("");
      });
    }
    this.renderer.refreshMarkers();
  }

  async refreshPairs(): Promise<void> {
    await this.guard(async () => {
      this.picks.sync(await this.api.listPairs());
      this.renderPairTable();
      this.renderControls();
      this.renderer.refreshMarkers();
    });
  }

  async deletePair(id: number): Promise<void> {
    await this.guard(async () => {
      await this.api.deletePair(id);
      await this.refreshPairs();
    });
  }

  async estimate(): Promise<void> {
    const mode = this.el.modeSelect.value as EstimateMode;
    await this.guard(
      async () => {
        this.lastEstimate = await this.api.estimate(mode);
        this.el.rmseLabel.textContent = `rmse ${this.lastEstimate.rmse.toFixed(4)} m (${this.lastEstimate.mode})`;
        this.renderPairTable();
        this.renderControls();
        if (this.el.previewToggle.checked) {
          await this.renderer.showPreview(true);
        }
      },
      (err) => {
        if (err.status === 409) {
          this.showHint(
            `need at least ${MIN_PAIRS_FOR_ESTIMATE} pairs before estimating`,
          );
          return true;
        }
        return false;
      },
    );
  }

  async togglePreview(on: boolean): Promise<void> {
    if (on && !this.lastEstimate) {
      this.el.previewToggle.checked = false;
      this.showHint("estimate a transform before previewing");
      return;
    }
    await this.guard(async () => {
      await this.renderer.showPreview(on);
    });
  }

  async exportTransform(): Promise<void> {
    const path = this.el.exportPath.value.trim();
    if (!path) {
      this.showHint("enter a path for the transform document");
      return;
    }
    await this.guard(
      async () => {
        const written = await this.api.exportTransform(path);
        this.el.status.textContent = `wrote ${written}`;
      },
      (err) => {
        if (err.status === 409) {
          this.showHint("estimate a transform before exporting");
          return true;
        }
        return false;
      },
    );
  }

  selectPair(id: number | null): void {
    this.picks.select(id);
    this.renderPairTable();
    this.renderer.refreshMarkers();
  }

  renderControls(): void {
    this.el.estimateButton.disabled = !this.picks.canEstimate;
    this.el.estimateButton.title = this.picks.canEstimate
      ? ""
      : `pick at least ${MIN_PAIRS_FOR_ESTIMATE} pairs`;
  }

  renderPairTable(): void {
    const tbody = this.el.pairTable;
    tbody.textContent = "";
    const est = this.lastEstimate;
    const residualById = new Map<number, number>();
    if (est) {
      est.pair_ids.forEach((id, i) => residualById.set(id, est.residuals[i]));
    }
    const worst = est ? worstPair(est.pair_ids, est.residuals) : null;
    const maxResidual = est ? Math.max(...est.residuals, 0) : 0;
    for (const pair of this.picks.pairs) {
      const row = document.createElement("tr");
      row.dataset.pairId = String(pair.id);
      if (pair.id === this.picks.selectedPairId) row.classList.add("selected");
      if (pair.id === worst) row.classList.add("worst");
      const residual = residualById.get(pair.id);
      const cells = [
        `#${pair.id}`,
        pair.source_point.map((v) => v.toFixed(2)).join(", "),
        pair.target_point.map((v) => v.toFixed(2)).join(", "),
        residual === undefined ? "-" : residual.toFixed(4),
      ];
      for (const text of cells) {
        const td = document.createElement("td");
        td.textContent = text;
        row.appendChild(td);
      }
      if (residual !== undefined) {
        (row.lastElementChild as HTMLElement).style.color = residualColor(
          residual,
          maxResidual,
        );
      }
      const del = document.createElement("td");
      const btn = document.createElement("button");
      btn.textContent = "x";
      btn.className = "delete";
      btn.addEventListener("click", (event) => {
        event.stopPropagation();
        void this.deletePair(pair.id);
      });
      del.appendChild(btn);
      row.appendChild(del);
      row.addEventListener("click", () =>
        this.selectPair(pair.id === this.picks.selectedPairId ? null : pair.id),
      );
      tbody.appendChild(row);
    }
  }

  showHint(message: string): void {
    this.el.hint.textContent = message;
  }

  private showBanner(message: string): void {
    this.el.banner.textContent = message;
    this.el.banner.style.display = message ? "block" : "none";
  }

  /** Run a server call; ApiErrors may be claimed by `handle`, anything else
   * lands in the non-blocking banner. */
  private async guard(
    body: () => Promise<void>,
    handle?: (err: ApiError) => boolean,
  ): Promise<void> {
    try {
      await body();
      this.showBanner("");
    } catch (err) {
      if (err instanceof ApiError && handle && handle(err)) return;
      if (err instanceof ApiError) {
        this.showBanner(`server error: ${err.kind} (${err.message})`);
      } else {
        this.showBanner(`server unreachable: ${String(err)}`);
      }
    }
  }
}
