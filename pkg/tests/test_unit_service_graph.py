import math
import unittest
from unittest.mock import patch

import numpy as np
from pydantic import ValidationError

from builders import complete_graph, cycle_graph, path_graph, people_graph, person, star_graph
from src.models.graph import SocialGraph
from src.schemas.schemas import GraphGenConfig, GraphModel, NodeAttrs
from src.services.errors import ConfigurationError, InvalidInputError
from src.services.graph import (algebraic_connectivity, degree_proportional_sample, epidemic_threshold,
                                exposed_population, generate_synthetic, induced_subgraph, largest_component,
                                remove_nodes)
from config import settings


class TestSocialGraph(unittest.TestCase):
    def test_self_loop_rejected(self):
        with self.assertRaises(InvalidInputError):
            people_graph(3, [(1, 1)])

    def test_duplicate_friend_edge_rejected(self):
        with self.assertRaises(InvalidInputError):
            people_graph(3, [(0, 1), (1, 0)])

    def test_friend_edge_to_page_rejected(self):
        with self.assertRaises(InvalidInputError):
            people_graph(2, [(0, 2)], n_pages=1)

    def test_follow_edge_from_page_rejected(self):
        with self.assertRaises(InvalidInputError):
            people_graph(2, n_pages=2, follow_edges=[(2, 3)])

    def test_unknown_node_rejected(self):
        with self.assertRaises(InvalidInputError):
            people_graph(2, [(0, 5)])

    def test_degree_counts_both_edge_kinds(self):
        graph = people_graph(3, [(0, 1)], n_pages=1, follow_edges=[(0, 3), (2, 3)])
        self.assertEqual(graph.degree(0), 2)
        self.assertEqual(graph.degree(3), 2)
        self.assertEqual(graph.friend_degrees().tolist(), [1, 1, 0, 0])
        self.assertEqual(graph.followers(3).tolist(), [0, 2])
        self.assertEqual(graph.friends(0).tolist(), [1])

    def test_page_demographics_are_rejected(self):
        with self.assertRaises(ValidationError):
            NodeAttrs(kind="page", age=30)

    def test_person_needs_demographics(self):
        with self.assertRaises(ValidationError):
            NodeAttrs(kind="person", age=30)


class TestGenerateSynthetic(unittest.TestCase):
    def setUp(self) -> None:
        self.config = GraphGenConfig(n_people=200, n_pages=5, page_follow_mean=10, rng_seed=7)

    def test_counts(self):
        graph = generate_synthetic(self.config)
        self.assertEqual(graph.n_people, 200)
        self.assertEqual(graph.n_pages, 5)
        self.assertTrue(graph.is_page[200:].all())

    def test_same_seed_same_graph(self):
        first = generate_synthetic(self.config)
        second = generate_synthetic(self.config)
        self.assertEqual(first.nodes, second.nodes)
        self.assertEqual(first.friend_edges, second.friend_edges)
        self.assertEqual(first.follow_edges, second.follow_edges)

    def test_full_assortativity_gives_one_country_per_component(self):
        config = GraphGenConfig(model=GraphModel.SMALL_WORLD, n_people=60, neighbors=4, rewiring_p=0.2,
                                n_countries=5, country_assortativity=1.0, rng_seed=3)
        graph = generate_synthetic(config)
        for u, v in graph.friend_edges:
            self.assertEqual(graph.nodes[u].country, graph.nodes[v].country)

    def test_zero_people_rejected(self):
        with self.assertRaises(ValidationError):
            GraphGenConfig(n_people=0)

    def test_attachment_too_large(self):
        with self.assertRaises(ConfigurationError):
            generate_synthetic(GraphGenConfig(n_people=3, attachment=3))


class TestDegreeProportionalSample(unittest.TestCase):
    def test_star_hub_frequency(self):
        graph = star_graph(10)
        draws = np.array(degree_proportional_sample(graph, 10_000, 11))
        self.assertAlmostEqual(float(np.mean(draws == 0)), 0.5, delta=0.015)

    def test_zero_draws(self):
        self.assertEqual(degree_proportional_sample(star_graph(3), 0, 1), [])

    def test_isolated_graph(self):
        with self.assertRaises(InvalidInputError):
            degree_proportional_sample(people_graph(4), 2, 1)

    def test_empty_graph(self):
        with self.assertRaises(InvalidInputError):
            degree_proportional_sample(SocialGraph([]), 2, 1)

    def test_seeded(self):
        graph = cycle_graph(20)
        self.assertEqual(degree_proportional_sample(graph, 50, 5), degree_proportional_sample(graph, 50, 5))

    def test_frequencies_follow_degrees(self):
        draws = 100_000
        for graph, expected in ((complete_graph(3), [1 / 3] * 3), (path_graph(4), [1 / 6, 1 / 3, 1 / 3, 1 / 6])):
            sample = degree_proportional_sample(graph, draws, 2024)
            observed = np.bincount(sample, minlength=graph.node_count) / draws
            expected = np.array(expected)
            sigma = np.sqrt(expected * (1 - expected) / draws)
            self.assertTrue(np.all(np.abs(observed - expected) <= 4 * sigma), observed)
            self.assertLess(0.5 * np.abs(observed - expected).sum(), 0.01)


class TestSubgraphs(unittest.TestCase):
    def test_induced_subgraph_of_cycle(self):
        sub = induced_subgraph(cycle_graph(5), [2, 0, 1])
        self.assertEqual(sub.node_count, 3)
        self.assertEqual(len(sub.friend_edges), 2)
        self.assertEqual(sub.origin_ids.tolist(), [0, 1, 2])

    def test_induced_subgraph_keeps_follow_edges(self):
        graph = people_graph(3, [(0, 1)], n_pages=1, follow_edges=[(0, 3), (2, 3)])
        sub = induced_subgraph(graph, [2, 3])
        self.assertEqual(sub.follow_edges, ((0, 1),))
        self.assertEqual(sub.origin_ids.tolist(), [2, 3])

    def test_unknown_node(self):
        with self.assertRaises(InvalidInputError):
            induced_subgraph(cycle_graph(5), [0, 9])

    def test_remove_nodes(self):
        remainder = remove_nodes(star_graph(4), [0])
        self.assertEqual(remainder.node_count, 4)
        self.assertEqual(remainder.edge_count, 0)

    def test_largest_component(self):
        graph = people_graph(5, [(0, 1), (2, 3), (3, 4)])
        self.assertEqual(largest_component(graph), {2, 3, 4})


class TestExposedPopulation(unittest.TestCase):
    def test_star_hub_exposes_leaves(self):
        self.assertEqual(exposed_population(star_graph(4), [0]), {1, 2, 3, 4})

    def test_sharers_excluded(self):
        self.assertEqual(exposed_population(star_graph(4), [0, 1]), {2, 3, 4})

    def test_common_neighbor_counted_once(self):
        self.assertEqual(exposed_population(path_graph(3), [0, 2]), {1})

    def test_page_exposes_followers(self):
        graph = people_graph(3, [(0, 1)], n_pages=1, follow_edges=[(0, 3), (2, 3)])
        self.assertEqual(exposed_population(graph, [3]), {0, 2})

    def test_no_sharers(self):
        self.assertEqual(exposed_population(star_graph(2), []), set())


class TestAlgebraicConnectivity(unittest.TestCase):
    def test_complete_graph(self):
        self.assertAlmostEqual(algebraic_connectivity(complete_graph(5)), 5.0, places=8)

    def test_four_cycle(self):
        self.assertAlmostEqual(algebraic_connectivity(cycle_graph(4)), 2.0, places=8)

    def test_disconnected(self):
        self.assertEqual(algebraic_connectivity(people_graph(4, [(0, 1), (2, 3)])), 0.0)

    def test_largest_only(self):
        graph = people_graph(6, [(0, 1), (0, 2), (1, 2), (3, 4)])
        self.assertAlmostEqual(algebraic_connectivity(graph, largest_only=True), 3.0, places=8)

    def test_iterative_solver_matches_closed_form(self):
        with patch.object(settings, "DENSE_EIGEN_LIMIT", 10):
            value = algebraic_connectivity(path_graph(30))
        self.assertAlmostEqual(value, 2 - 2 * math.cos(math.pi / 30), delta=1e-4)

    def test_single_node(self):
        with self.assertRaises(InvalidInputError):
            algebraic_connectivity(SocialGraph([person()]))

    def test_bad_tolerance(self):
        with self.assertRaises(InvalidInputError):
            algebraic_connectivity(cycle_graph(4), tolerance=0)


class TestEpidemicThreshold(unittest.TestCase):
    def test_star(self):
        self.assertAlmostEqual(epidemic_threshold(star_graph(4)), 0.4)

    def test_no_edges(self):
        with self.assertRaises(InvalidInputError):
            epidemic_threshold(people_graph(3))


if __name__ == '__main__':
    unittest.main()
