"""Counting subtrees of random simply generated trees."""
