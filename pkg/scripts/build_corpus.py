#!/usr/bin/env python3
"""Author the desk evaluation corpus and write data/corpus.json.

Each case is built programmatically, executed against the builtin agents,
and its result asserted against the hand-computed answer before anything is
written. 12 word-problem cases plus 8 equation-chain cases, all 3-7 nodes.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from planweave.agents import default_registry
from planweave.executor import execute_all, extract_final_answer
from planweave.harness import GoldCase
from planweave.plan import DataEdge, InputSlot, OutputSlot, PlanGraph, TaskNode, validate

OUT_PATH = Path(__file__).resolve().parents[1] / "src" / "planweave" / "data" / "corpus.json"


def node(nid: int, agent: str, task: str, inputs: list, outputs: list[str], config: dict | None = None) -> TaskNode:
    slots = [InputSlot(name=n, value=v) for n, v in inputs]
    return TaskNode(
        id=nid,
        agent=agent,
        task=task,
        inputs=slots,
        outputs=[OutputSlot(name=n) for n in outputs],
        config=config or {},
    )


def edge(src: int, dest: int, out: str, inp: str) -> DataEdge:
    return DataEdge(src, dest, out, inp)


def ident(nid: int, query: str, select: list[int] | None = None) -> TaskNode:
    config = {"select": select} if select is not None else {}
    return node(
        nid,
        "identify_operands",
        f"Identify the numeric operands in the query: {query}",
        [("query", query)],
        ["operands"],
        config,
    )


def gsm8k_cases() -> list[GoldCase]:
    cases: list[GoldCase] = []

    q = "Tom has 3 apples and buys 4 more. Each apple is worth 2 dollars. What is the total value of his apples?"
    cases.append(
        GoldCase(
            id="g01",
            dataset="gsm8k-style",
            query=q,
            gold_answer=14,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[0, 1]),
                    node(2, "add", "Add the apple counts.", [("counts", None)], ["sum"]),
                    node(3, "multiply", "Multiply the total count by the price per apple.", [("count", None), ("price", 2)], ["product"]),
                ],
                edges=[edge(1, 2, "operands", "counts"), edge(2, 3, "sum", "count")],
            ),
        )
    )

    q = "A baker made 24 cookies and sold 9 in the morning and 6 in the afternoon. How many cookies are left?"
    cases.append(
        GoldCase(
            id="g02",
            dataset="gsm8k-style",
            query=q,
            gold_answer=9,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[1, 2]),
                    node(2, "add", "Add the cookies sold in the morning and afternoon.", [("sold_parts", None)], ["sum"]),
                    node(3, "subtract", "Subtract the cookies sold from the cookies baked.", [("baked", 24), ("sold", None)], ["difference"]),
                ],
                edges=[edge(1, 2, "operands", "sold_parts"), edge(2, 3, "sum", "sold")],
            ),
        )
    )

    q = "A glass costs 5 dollars. Brock buys 16 glasses and every second glass costs only 60% of the price. How much does he pay in total?"
    cases.append(
        GoldCase(
            id="g03",
            dataset="gsm8k-style",
            query=q,
            gold_answer=64,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[1]),
                    node(2, "divide", "Divide the number of glasses by two to get glasses per price tier.", [("glasses", None), ("half", 2)], ["quotient"]),
                    node(3, "percentage_of", "Compute the discounted price per glass.", [("percentage", "60%"), ("price", 5)], ["result"]),
                    node(4, "multiply", "Multiply full-price glasses by the full price.", [("count", None), ("price", 5)], ["product"]),
                    node(5, "multiply", "Multiply discounted glasses by the discounted price.", [("count", None), ("each", None)], ["product"]),
                    node(6, "add", "Add the full-price and discounted totals.", [("full", None), ("discounted", None)], ["sum"]),
                ],
                edges=[
                    edge(1, 2, "operands", "glasses"),
                    edge(2, 4, "quotient", "count"),
                    edge(2, 5, "quotient", "count"),
                    edge(3, 5, "result", "each"),
                    edge(4, 6, "product", "full"),
                    edge(5, 6, "product", "discounted"),
                ],
            ),
        )
    )

    q = "Misty ran 4 miles on Monday, 6 miles on Tuesday and 5 miles on Wednesday. How many kilometers is that in total if one mile is about 1.6 kilometers?"
    cases.append(
        GoldCase(
            id="g04",
            dataset="gsm8k-style",
            query=q,
            gold_answer=24,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[0, 1, 2]),
                    node(2, "add", "Add the daily mileages.", [("miles", None)], ["sum"]),
                    node(3, "multiply", "Convert miles to kilometers.", [("total_miles", None), ("km_per_mile", 1.6)], ["product"]),
                ],
                edges=[edge(1, 2, "operands", "miles"), edge(2, 3, "sum", "total_miles")],
            ),
        )
    )

    q = "A farmer plants 12 rows of 8 trees in each of his 3 fields. How many trees does he plant in all fields?"
    cases.append(
        GoldCase(
            id="g05",
            dataset="gsm8k-style",
            query=q,
            gold_answer=288,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[0, 1]),
                    node(2, "multiply", "Multiply rows by trees per row.", [("per_field", None)], ["product"]),
                    node(3, "multiply", "Multiply trees per field by the number of fields.", [("fields", 3), ("per_field", None)], ["product"]),
                ],
                edges=[edge(1, 2, "operands", "per_field"), edge(2, 3, "product", "per_field")],
            ),
        )
    )

    q = "Sam earns 15 dollars per hour and works 8 hours a day. After paying 20 dollars for lunch and transport, how much does he keep per day?"
    cases.append(
        GoldCase(
            id="g06",
            dataset="gsm8k-style",
            query=q,
            gold_answer=100,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[0, 1]),
                    node(2, "multiply", "Multiply the hourly wage by hours worked.", [("wage_hours", None)], ["product"]),
                    node(3, "subtract", "Subtract daily expenses from earnings.", [("earned", None), ("expenses", 20)], ["difference"]),
                ],
                edges=[edge(1, 2, "operands", "wage_hours"), edge(2, 3, "product", "earned")],
            ),
        )
    )

    q = "A school has 14 classes of 25 students. 30% of the students take the bus. How many students take the bus?"
    cases.append(
        GoldCase(
            id="g07",
            dataset="gsm8k-style",
            query=q,
            gold_answer=105,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[0, 1]),
                    node(2, "multiply", "Multiply classes by students per class.", [("sizes", None)], ["product"]),
                    node(3, "percentage_of", "Take 30% of the student total.", [("percentage", "30%"), ("students", None)], ["result"]),
                ],
                edges=[edge(1, 2, "operands", "sizes"), edge(2, 3, "product", "students")],
            ),
        )
    )

    q = "Nina saves 12 dollars each week for 9 weeks. Her brother then gives her 25 dollars more. How much money does she have?"
    cases.append(
        GoldCase(
            id="g08",
            dataset="gsm8k-style",
            query=q,
            gold_answer=133,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[0, 1]),
                    node(2, "multiply", "Multiply weekly savings by the number of weeks.", [("savings", None)], ["product"]),
                    node(3, "add", "Add the gift to the savings.", [("saved", None), ("gift", 25)], ["sum"]),
                ],
                edges=[edge(1, 2, "operands", "savings"), edge(2, 3, "product", "saved")],
            ),
        )
    )

    q = "A full tank holds 240 liters and 90 liters have already been drained. A pump drains 15 liters per minute. How many minutes until the rest is drained?"
    cases.append(
        GoldCase(
            id="g09",
            dataset="gsm8k-style",
            query=q,
            gold_answer=10,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[0, 1]),
                    node(2, "subtract", "Subtract the drained volume from the full volume.", [("volumes", None)], ["difference"]),
                    node(3, "divide", "Divide the remaining volume by the drain rate.", [("remaining", None), ("rate", 15)], ["quotient"]),
                ],
                edges=[edge(1, 2, "operands", "volumes"), edge(2, 3, "difference", "remaining")],
            ),
        )
    )

    q = "Leo reads 35 pages every day. How many pages does he read in 2 weeks of 7 days?"
    cases.append(
        GoldCase(
            id="g10",
            dataset="gsm8k-style",
            query=q,
            gold_answer=490,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[1, 2]),
                    node(2, "multiply", "Multiply weeks by days per week.", [("weeks_days", None)], ["product"]),
                    node(3, "multiply", "Multiply total days by pages per day.", [("days", None), ("pages", 35)], ["product"]),
                ],
                edges=[edge(1, 2, "operands", "weeks_days"), edge(2, 3, "product", "days")],
            ),
        )
    )

    q = "A shop sells 18 red pens and 14 blue pens in the morning, then 11 red pens and 9 blue pens in the afternoon. How many pens were sold in total?"
    cases.append(
        GoldCase(
            id="g11",
            dataset="gsm8k-style",
            query=q,
            gold_answer=52,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[0, 1]),
                    ident(2, q, select=[2, 3]),
                    node(3, "add", "Add the morning sales.", [("morning", None)], ["sum"]),
                    node(4, "add", "Add the afternoon sales.", [("afternoon", None)], ["sum"]),
                    node(5, "add", "Add the morning and afternoon totals.", [("morning_total", None), ("afternoon_total", None)], ["sum"]),
                ],
                edges=[
                    edge(1, 3, "operands", "morning"),
                    edge(2, 4, "operands", "afternoon"),
                    edge(3, 5, "sum", "morning_total"),
                    edge(4, 5, "sum", "afternoon_total"),
                ],
            ),
        )
    )

    q = "A movie ticket costs 9 dollars. A group of 5 friends buys tickets and pays with a 50 dollar bill. How much change do they get?"
    cases.append(
        GoldCase(
            id="g12",
            dataset="gsm8k-style",
            query=q,
            gold_answer=5,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    ident(1, q, select=[0, 1]),
                    node(2, "multiply", "Multiply the ticket price by the number of friends.", [("price_count", None)], ["product"]),
                    node(3, "subtract", "Subtract the total cost from the bill.", [("paid", 50), ("cost", None)], ["difference"]),
                ],
                edges=[edge(1, 2, "operands", "price_count"), edge(2, 3, "product", "cost")],
            ),
        )
    )

    return cases


def multistep_cases() -> list[GoldCase]:
    cases: list[GoldCase] = []

    q = "((2 + 3) * 4 - 6) / 2 ="
    cases.append(
        GoldCase(
            id="m01",
            dataset="multistep-style",
            query=q,
            gold_answer=7,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    node(1, "add", "Add 2 and 3.", [("a", 2), ("b", 3)], ["sum"]),
                    node(2, "multiply", "Multiply the sum by 4.", [("a", None), ("b", 4)], ["product"]),
                    node(3, "subtract", "Subtract 6 from the product.", [("a", None), ("b", 6)], ["difference"]),
                    node(4, "divide", "Divide the difference by 2.", [("a", None), ("b", 2)], ["quotient"]),
                ],
                edges=[
                    edge(1, 2, "sum", "a"),
                    edge(2, 3, "product", "a"),
                    edge(3, 4, "difference", "a"),
                ],
            ),
        )
    )

    q = "(8 - 3) * (2 + 4) + 10 ="
    cases.append(
        GoldCase(
            id="m02",
            dataset="multistep-style",
            query=q,
            gold_answer=40,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    node(1, "subtract", "Subtract 3 from 8.", [("a", 8), ("b", 3)], ["difference"]),
                    node(2, "add", "Add 2 and 4.", [("a", 2), ("b", 4)], ["sum"]),
                    node(3, "multiply", "Multiply the two intermediate results.", [("a", None), ("b", None)], ["product"]),
                    node(4, "add", "Add 10 to the product.", [("a", None), ("b", 10)], ["sum"]),
                ],
                edges=[
                    edge(1, 3, "difference", "a"),
                    edge(2, 3, "sum", "b"),
                    edge(3, 4, "product", "a"),
                ],
            ),
        )
    )

    q = "(100 / 5 + 7) * 3 - 11 ="
    cases.append(
        GoldCase(
            id="m03",
            dataset="multistep-style",
            query=q,
            gold_answer=70,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    node(1, "divide", "Divide 100 by 5.", [("a", 100), ("b", 5)], ["quotient"]),
                    node(2, "add", "Add 7 to the quotient.", [("a", None), ("b", 7)], ["sum"]),
                    node(3, "multiply", "Multiply the sum by 3.", [("a", None), ("b", 3)], ["product"]),
                    node(4, "subtract", "Subtract 11 from the product.", [("a", None), ("b", 11)], ["difference"]),
                ],
                edges=[
                    edge(1, 2, "quotient", "a"),
                    edge(2, 3, "sum", "a"),
                    edge(3, 4, "product", "a"),
                ],
            ),
        )
    )

    q = "(6 * 7 - 2) / 5 + 9 ="
    cases.append(
        GoldCase(
            id="m04",
            dataset="multistep-style",
            query=q,
            gold_answer=17,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    node(1, "multiply", "Multiply 6 by 7.", [("a", 6), ("b", 7)], ["product"]),
                    node(2, "subtract", "Subtract 2 from the product.", [("a", None), ("b", 2)], ["difference"]),
                    node(3, "divide", "Divide the difference by 5.", [("a", None), ("b", 5)], ["quotient"]),
                    node(4, "add", "Add 9 to the quotient.", [("a", None), ("b", 9)], ["sum"]),
                ],
                edges=[
                    edge(1, 2, "product", "a"),
                    edge(2, 3, "difference", "a"),
                    edge(3, 4, "quotient", "a"),
                ],
            ),
        )
    )

    q = "((4 + 5) * (9 - 3) - 14) / 4 ="
    cases.append(
        GoldCase(
            id="m05",
            dataset="multistep-style",
            query=q,
            gold_answer=10,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    node(1, "add", "Add 4 and 5.", [("a", 4), ("b", 5)], ["sum"]),
                    node(2, "subtract", "Subtract 3 from 9.", [("a", 9), ("b", 3)], ["difference"]),
                    node(3, "multiply", "Multiply the sum by the difference.", [("a", None), ("b", None)], ["product"]),
                    node(4, "subtract", "Subtract 14 from the product.", [("a", None), ("b", 14)], ["difference"]),
                    node(5, "divide", "Divide by 4.", [("a", None), ("b", 4)], ["quotient"]),
                ],
                edges=[
                    edge(1, 3, "sum", "a"),
                    edge(2, 3, "difference", "b"),
                    edge(3, 4, "product", "a"),
                    edge(4, 5, "difference", "a"),
                ],
            ),
        )
    )

    q = "(50 - 8 * 4) / 6 + 12 ="
    cases.append(
        GoldCase(
            id="m06",
            dataset="multistep-style",
            query=q,
            gold_answer=15,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    node(1, "multiply", "Multiply 8 by 4.", [("a", 8), ("b", 4)], ["product"]),
                    node(2, "subtract", "Subtract the product from 50.", [("a", 50), ("b", None)], ["difference"]),
                    node(3, "divide", "Divide the difference by 6.", [("a", None), ("b", 6)], ["quotient"]),
                    node(4, "add", "Add 12 to the quotient.", [("a", None), ("b", 12)], ["sum"]),
                ],
                edges=[
                    edge(1, 2, "product", "b"),
                    edge(2, 3, "difference", "a"),
                    edge(3, 4, "quotient", "a"),
                ],
            ),
        )
    )

    q = "((12 / 3) * (5 + 2) - 8) * 2 ="
    cases.append(
        GoldCase(
            id="m07",
            dataset="multistep-style",
            query=q,
            gold_answer=40,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    node(1, "divide", "Divide 12 by 3.", [("a", 12), ("b", 3)], ["quotient"]),
                    node(2, "add", "Add 5 and 2.", [("a", 5), ("b", 2)], ["sum"]),
                    node(3, "multiply", "Multiply the quotient by the sum.", [("a", None), ("b", None)], ["product"]),
                    node(4, "subtract", "Subtract 8 from the product.", [("a", None), ("b", 8)], ["difference"]),
                    node(5, "multiply", "Double the difference.", [("a", None), ("b", 2)], ["product"]),
                ],
                edges=[
                    edge(1, 3, "quotient", "a"),
                    edge(2, 3, "sum", "b"),
                    edge(3, 4, "product", "a"),
                    edge(4, 5, "difference", "a"),
                ],
            ),
        )
    )

    q = "(((9 + 6) / 5 + 7) * 4 - 10) / 2 ="
    cases.append(
        GoldCase(
            id="m08",
            dataset="multistep-style",
            query=q,
            gold_answer=15,
            gold_plan=PlanGraph(
                query=q,
                nodes=[
                    node(1, "add", "Add 9 and 6.", [("a", 9), ("b", 6)], ["sum"]),
                    node(2, "divide", "Divide the sum by 5.", [("a", None), ("b", 5)], ["quotient"]),
                    node(3, "add", "Add 7 to the quotient.", [("a", None), ("b", 7)], ["sum"]),
                    node(4, "multiply", "Multiply the sum by 4.", [("a", None), ("b", 4)], ["product"]),
                    node(5, "subtract", "Subtract 10 from the product.", [("a", None), ("b", 10)], ["difference"]),
                    node(6, "divide", "Divide the difference by 2.", [("a", None), ("b", 2)], ["quotient"]),
                ],
                edges=[
                    edge(1, 2, "sum", "a"),
                    edge(2, 3, "quotient", "a"),
                    edge(3, 4, "sum", "a"),
                    edge(4, 5, "product", "a"),
                    edge(5, 6, "difference", "a"),
                ],
            ),
        )
    )

    return cases


def main() -> int:
    registry = default_registry()
    cases = gsm8k_cases() + multistep_cases()
    assert len(cases) == 20, f"expected 20 cases, built {len(cases)}"

    for case in cases:
        report = validate(case.gold_plan, registry)
        assert report.ok, f"{case.id}: {report.summary()}"
        assert len(case.gold_plan.nodes) >= 3, f"{case.id}: plan too small for all corruption kinds"
        executed, _ = execute_all(case.gold_plan, registry)
        answer = extract_final_answer(executed)
        assert answer == case.gold_answer, f"{case.id}: executes to {answer!r}, stated {case.gold_answer!r}"
        print(f"{case.id}: {answer!r} ok ({len(case.gold_plan.nodes)} nodes)")

    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    payload = [case.to_wire() for case in cases]
    OUT_PATH.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {len(cases)} cases to {OUT_PATH}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
