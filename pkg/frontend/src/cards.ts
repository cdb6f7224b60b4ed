import type { DancePlan, Movement } from "./types";

/** One card per selection: gloss, movement id, and the generator's verbatim
 * rationale (the inspection surface of the studio). */
export function renderCards(
  container: HTMLElement,
  plan: DancePlan,
  movements: Map<string, Movement>,
  onSelect: (index: number) => void,
): void {
  container.innerHTML = "";
  plan.selections.forEach((selection, index) => {
    const card = document.createElement("article");
    card.className = "card";
    card.dataset.index = String(index);

    const title = document.createElement("h3");
    const gloss = movements.get(selection.movement_id)?.gloss ?? selection.movement_id;
    title.textContent = `${index + 1}. ${gloss}`;
    card.appendChild(title);

    const id = document.createElement("code");
    id.textContent = selection.movement_id;
    card.appendChild(id);

    const rationale = document.createElement("p");
    rationale.textContent = selection.rationale;
    card.appendChild(rationale);

    card.addEventListener("click", () => onSelect(index));
    container.appendChild(card);
  });
}

export function highlightCard(container: HTMLElement, index: number): void {
  container.querySelectorAll<HTMLElement>(".card").forEach((card) => {
    card.classList.toggle("active", card.dataset.index === String(index));
  });
}
