/**
 * Browser entry point: wires the session state to the DOM.
 *
 * Kept deliberately thin — all behavior lives in session.ts/api.ts (tested in
 * node); this file only moves bytes between the service, the canvas, and the
 * controls.
 */
import { ServiceClient } from "./api.js";
import { RgbaLabelReader, regionAtCursor } from "./hit_test.js";
import { legendStops } from "./overlay.js";
import { PromptStudio } from "./session.js";

const client = new ServiceClient("");
const studio = new PromptStudio(client);

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
};

const imageInput = el<HTMLInputElement>("image-input");
const gtInput = el<HTMLInputElement>("gt-input");
const promptInput = el<HTMLInputElement>("prompt-input");
const submitButton = el<HTMLButtonElement>("submit-button");
const confidenceToggle = el<HTMLButtonElement>("confidence-toggle");
const runSelect = el<HTMLSelectElement>("run-select");
const stateLine = el<HTMLDivElement>("state-line");
const banner = el<HTMLDivElement>("error-banner");
const regionList = el<HTMLUListElement>("region-list");
const metricsPanel = el<HTMLDivElement>("metrics-panel");
const downloadLink = el<HTMLAnchorElement>("download-link");
const viewer = el<HTMLCanvasElement>("viewer");
const legend = el<HTMLDivElement>("legend");

let maskReader: RgbaLabelReader | null = null;

function renderBanner(): void {
  banner.textContent = studio.errorBanner ?? "";
  banner.style.display = studio.errorBanner ? "block" : "none";
}

function renderHistory(): void {
  runSelect.innerHTML = "";
  for (const entry of studio.history) {
    const option = document.createElement("option");
    option.value = entry.runId;
    option.textContent = `${entry.prompt || "(unconditioned)"} — ${entry.runId}`;
    option.selected = entry.runId === studio.activeRunId;
    runSelect.appendChild(option);
  }
}

function renderLegend(): void {
  legend.innerHTML = "";
  if (studio.overlayMode !== "confidence") return;
  for (const stop of legendStops(5)) {
    const chip = document.createElement("span");
    chip.className = "legend-chip";
    chip.style.background = `rgb(${stop.color.join(",")})`;
    chip.textContent = stop.value.toFixed(2);
    legend.appendChild(chip);
  }
}

async function renderViewer(): Promise<void> {
  const url = studio.displayedArtifactUrl();
  renderLegend();
  if (!url) {
    viewer.getContext("2d")?.clearRect(0, 0, viewer.width, viewer.height);
    return;
  }
  const blob = await client.fetchArtifactBytes(url);
  const bitmap = await createImageBitmap(blob);
  viewer.width = bitmap.width;
  viewer.height = bitmap.height;
  const ctx = viewer.getContext("2d");
  if (!ctx) return;
  ctx.drawImage(bitmap, 0, 0);

  const artifacts = studio.activeEntry?.record?.artifacts ?? {};
  const maskUrl = artifacts["label_mask"];
  if (maskUrl) {
    const maskBlob = await client.fetchArtifactBytes(maskUrl);
    const maskBitmap = await createImageBitmap(maskBlob);
    const scratch = document.createElement("canvas");
    scratch.width = maskBitmap.width;
    scratch.height = maskBitmap.height;
    const sctx = scratch.getContext("2d");
    if (sctx) {
      sctx.drawImage(maskBitmap, 0, 0);
      const data = sctx.getImageData(0, 0, scratch.width, scratch.height);
      maskReader = new RgbaLabelReader(data.width, data.height, data.data);
    }
  }
}

function renderRegions(): void {
  regionList.innerHTML = "";
  const entry = studio.activeEntry;
  if (!entry) return;
  const scoreByLabel = new Map(entry.scores.map((s) => [s.label, s.score]));
  for (const region of entry.regions) {
    const item = document.createElement("li");
    const score = scoreByLabel.get(region.id);
    const mark = entry.selected.has(region.id) ? "☑" : "☐";
    item.textContent =
      `${mark} region ${region.id}: ${region.area} px` +
      (score !== undefined ? `, score ${score.toExponential(2)}` : "");
    item.onclick = () => void onRegionClick(region.id);
    regionList.appendChild(item);
  }
}

function renderMetrics(): void {
  const metrics = studio.metricsPanel();
  metricsPanel.textContent = metrics
    ? `DSC ${metrics.dsc.toFixed(2)}%  IoU ${metrics.iou.toFixed(2)}%  ` +
      `precision ${metrics.precision.toFixed(2)}%  recall ${metrics.recall.toFixed(2)}%`
    : "";
  const download = studio.downloadMaskUrl();
  downloadLink.style.display = download ? "inline" : "none";
  if (download) downloadLink.href = download;
}

async function renderAll(): Promise<void> {
  renderBanner();
  renderHistory();
  renderRegions();
  renderMetrics();
  await renderViewer();
}

async function onRegionClick(label: number): Promise<void> {
  try {
    await studio.clickRegion(label);
  } catch {
    // banner already carries the service error
  }
  await renderAll();
}

submitButton.onclick = async () => {
  const image = imageInput.files?.[0];
  const gt = gtInput.files?.[0] ?? undefined;
  if (!image) {
    studio.errorBanner = "choose an image or archive first";
    renderBanner();
    return;
  }
  const isArchive = image.name.endsWith(".atnp");
  stateLine.textContent = "submitting…";
  try {
    await studio.submitPrompt({
      prompt: promptInput.value,
      archive: isArchive ? image : undefined,
      image: isArchive ? undefined : image,
      imageName: image.name,
      gt,
    });
  } catch {
    // surfaced in the banner
  }
  stateLine.textContent = studio.activeEntry?.record?.state ?? "";
  await renderAll();
};

confidenceToggle.onclick = async () => {
  studio.toggleConfidence();
  await renderAll();
};

runSelect.onchange = async () => {
  studio.switchRun(runSelect.value);
  await renderAll();
};

viewer.onclick = async (event) => {
  if (!maskReader) return;
  const rect = viewer.getBoundingClientRect();
  const label = regionAtCursor(
    maskReader,
    event.clientX - rect.left,
    event.clientY - rect.top,
    rect.width,
    rect.height,
  );
  if (label === null) return;
  await onRegionClick(label);
};

renderBanner();
