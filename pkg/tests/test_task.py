import random

import pytest

from goalscripts.corpus import Corpus, split_corpus
from goalscripts.task import (
    EsdScenario,
    TaskError,
    TaskInstance,
    build_retrieval_task,
    convert_esd,
    load_esd_scenarios,
    load_tasks,
    save_tasks,
)
from conftest import make_script, make_synthetic_task


def corpus_with_all_in_test(scripts):
    corpus = Corpus(language="en", scripts=scripts)
    corpus.split = {s.id: "test" for s in scripts}
    return corpus


class TestBuildRetrievalTask:
    def test_same_category_pool(self):
        scripts = [make_script(i, category="FOOD AND ENTERTAINING", n_steps=5)
                   for i in range(3)]
        corpus = corpus_with_all_in_test(scripts)
        task = build_retrieval_task(scripts[0], corpus)
        assert len(task.candidates) == 15
        assert task.length == 5
        assert task.gold == scripts[0].steps

    def test_excludes_other_categories(self):
        scripts = [make_script(0, category="A"), make_script(1, category="B")]
        corpus = corpus_with_all_in_test(scripts)
        task = build_retrieval_task(scripts[0], corpus)
        assert all(c.source_id == "s0" for c in task.candidates)

    def test_singleton_category(self):
        scripts = [make_script(0, category="LONELY")]
        corpus = corpus_with_all_in_test(scripts)
        task = build_retrieval_task(scripts[0], corpus)
        assert {c.text for c in task.candidates} == set(scripts[0].steps)

    def test_empty_category_pools_everything(self, caplog):
        scripts = [make_script(0, category=""), make_script(1, category="B")]
        corpus = corpus_with_all_in_test(scripts)
        with caplog.at_level("WARNING"):
            task = build_retrieval_task(scripts[0], corpus)
        assert len(task.candidates) == 10
        assert any("empty category" in r.message for r in caplog.records)

    def test_never_draws_from_train_split(self):
        scripts = [make_script(i, category="C") for i in range(4)]
        corpus = Corpus(language="en", scripts=scripts)
        corpus.split = {"s0": "test", "s1": "test", "s2": "train", "s3": "train"}
        task = build_retrieval_task(scripts[0], corpus)
        assert {c.source_id for c in task.candidates} == {"s0", "s1"}

    def test_train_script_rejected(self):
        scripts = [make_script(i, category="C") for i in range(2)]
        corpus = Corpus(language="en", scripts=scripts)
        corpus.split = {"s0": "train", "s1": "test"}
        with pytest.raises(TaskError):
            build_retrieval_task(scripts[0], corpus)

    def test_gold_always_in_pool_random_instances(self):
        # membership oracle over 1,000 random synthetic instances
        rng = random.Random(42)
        for _ in range(1000):
            task = make_synthetic_task(rng, pool_size=rng.randint(5, 30),
                                       l=rng.randint(1, 5))
            pool = {c.text for c in task.candidates}
            assert all(g in pool for g in task.gold)
            assert task.length == len(task.gold) >= 1

    def test_invariant_violation_rejected(self):
        from goalscripts.task import CandidateStep
        with pytest.raises(TaskError):
            TaskInstance(goal="g", length=1, candidates=(CandidateStep("x", "s"),),
                         gold=("y",), ordered=True)


class TestConvertEsd:
    def test_longest_esd_wins(self):
        scenario = EsdScenario(name="go shopping", esds=(
            tuple(f"a{i}" for i in range(4)),
            tuple(f"b{i}" for i in range(9)),
            tuple(f"c{i}" for i in range(6)),
        ))
        task = convert_esd(scenario, [scenario])
        assert task.length == 9
        assert task.gold[0] == "b0"
        assert task.ordered is True
        assert task.goal == "go shopping"

    def test_tie_goes_to_first(self):
        scenario = EsdScenario(name="x", esds=(
            ("first a", "first b"), ("second a", "second b")))
        task = convert_esd(scenario, [scenario])
        assert task.gold == ("first a", "first b")

    def test_output_count_matches_scenarios(self):
        scenarios = [
            EsdScenario(name=f"scenario {i}", esds=((f"{i}-s1", f"{i}-s2"),))
            for i in range(40)
        ]
        tasks = [convert_esd(s, scenarios) for s in scenarios]
        assert len(tasks) == 40

    def test_pool_spans_representatives(self):
        scenarios = [
            EsdScenario(name="a", esds=(("a1", "a2"), ("a-short",))),
            EsdScenario(name="b", esds=(("b1",),)),
        ]
        task = convert_esd(scenarios[0], scenarios)
        texts = {c.text for c in task.candidates}
        assert texts == {"a1", "a2", "b1"}

    def test_all_esds_pool_mode(self):
        scenarios = [
            EsdScenario(name="a", esds=(("a1", "a2"), ("a-short",))),
            EsdScenario(name="b", esds=(("b1",),)),
        ]
        task = convert_esd(scenarios[0], scenarios, pool="all-esds")
        assert "a-short" in {c.text for c in task.candidates}

    def test_empty_esd_list_rejected(self):
        with pytest.raises(TaskError):
            EsdScenario(name="empty", esds=())


class TestSerialization:
    def test_task_roundtrip(self, tmp_path):
        rng = random.Random(1)
        tasks = [make_synthetic_task(rng) for _ in range(3)]
        path = tmp_path / "tasks.jsonl"
        save_tasks(tasks, str(path))
        assert load_tasks(str(path)) == tasks

    def test_load_esd_scenarios(self, tmp_path):
        path = tmp_path / "esd.jsonl"
        path.write_text(
            '{"scenario": "bake", "esd": ["mix", "bake"]}\n'
            '{"scenario": "bake", "esd": ["mix", "bake", "cool"]}\n'
            '{"scenario": "shop", "esd": ["go", "buy"]}\n',
            encoding="utf-8",
        )
        scenarios = load_esd_scenarios(str(path))
        assert [s.name for s in scenarios] == ["bake", "shop"]
        assert len(scenarios[0].esds) == 2
